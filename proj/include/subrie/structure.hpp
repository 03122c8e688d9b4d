#ifndef SUBRIE_STRUCTURE_HPP
#define SUBRIE_STRUCTURE_HPP

#include <Eigen/Core>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "subrie/symbolic.hpp"

namespace subrie {

using Frame = std::vector<VectorField>;

/// m polynomial vector fields on R^d, declared orthonormal.
struct SRStructure {
    std::string name;
    int dim = 0;
    Frame frame;
    std::optional<Box> domain;

    int rank() const { return static_cast<int>(frame.size()); }
    /// Checks that all fields share `dim`; does not test bracket generation.
    void validate() const;
    /// Domain if declared, else [-1,1]^d.
    Box box_or_default() const;
    void require_in_domain(const Eigen::VectorXd& p, const std::string& what) const;
    /// X_u = sum_i u_i X_i as an exact field.
    VectorField combination(const std::vector<Rational>& u) const;
};

VectorField lie_bracket(const VectorField& X, const VectorField& Y);

/// Right-nested bracket [X_{w0},[X_{w1},...,X_{wk}]] for word w (0-based indices).
struct BracketWord {
    std::vector<int> word;
    VectorField field;
};

/// levels[k] holds the nonzero brackets of length k+1, deduplicated up to sign.
/// Level k+1 is [X_i, w] with i outer and w over level k, so words come out in
/// lexicographic order within a length.
std::vector<std::vector<BracketWord>> bracket_levels(const Frame& frame, int max_length);

struct FlagOptions {
    int max_depth = 6;
    double rank_tol = 1e-9;
    double probe_radius = 1e-3;
    bool probe = true;
};

struct FlagReport {
    Eigen::VectorXd point;
    std::vector<int> growth_vector;
    std::vector<int> weights;
    int step = 0;
    bool regular = false;
    std::string regularity_label = "sampled-regular";
    double rank_tol = 1e-9;
    double probe_radius = 1e-3;
};

class NotBracketGeneratingError : public NumericalError {
public:
    NotBracketGeneratingError(const std::string& what, std::vector<int> achieved)
        : NumericalError(what), achieved_(std::move(achieved))
    {
    }
    const std::vector<int>& achieved() const { return achieved_; }

private:
    std::vector<int> achieved_;
};

std::vector<int> weights_from_growth(const std::vector<int>& growth);

/// Growth vector at p from precomputed bracket levels; throws NotBracketGeneratingError.
std::vector<int> growth_at(const std::vector<std::vector<BracketWord>>& levels, int dim, const Eigen::VectorXd& p,
                           double rank_tol);

FlagReport flag_at(const SRStructure& s, const Eigen::VectorXd& p, const FlagOptions& opts = {});

struct RegularityMap {
    std::vector<FlagReport> reports;
    bool equiregular = true;
    std::vector<Eigen::VectorXd> singular_points;
};

/// Flags on a grid over the domain (or `box`); per_axis should be odd so the centre is sampled.
RegularityMap classify_regularity(const SRStructure& s, int per_axis = 5, const std::optional<Box>& box = std::nullopt,
                                  const FlagOptions& opts = {});

using PolyMatrix = std::vector<std::vector<Multinomial>>;

/// Y_i = sum_j c_ij X_j; c(q) must be orthogonal, checked on a grid of `box` within tol.
SRStructure apply_gauge(const SRStructure& s, const PolyMatrix& c, double tol = 1e-8,
                        const std::optional<Box>& box = std::nullopt, int per_axis = 5);
PolyMatrix constant_gauge(int dim, const Eigen::MatrixXd& c);

SRStructure heisenberg();
SRStructure grushin();
SRStructure engel();
SRStructure martinet();
SRStructure step3alpha(const Rational& alpha);

/// Resolves built-in names first (`heisenberg`, ..., `step3alpha`, `step3alpha(alpha=-1)`),
/// then treats `spec` as a structure-definition file path.
SRStructure load_structure(const std::string& spec, const std::map<std::string, std::string>& params = {});
bool is_builtin_structure(const std::string& spec);
SRStructure parse_structure(const std::string& text);
std::string to_text(const SRStructure& s);

/// Parses `X<k> = c1 dx<i> + ...` right-hand sides into a field on R^dim.
VectorField parse_field(const std::string& rhs, int dim);

}  // namespace subrie

#endif  // SUBRIE_STRUCTURE_HPP
