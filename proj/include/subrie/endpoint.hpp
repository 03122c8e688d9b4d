#ifndef SUBRIE_ENDPOINT_HPP
#define SUBRIE_ENDPOINT_HPP

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subrie/flow.hpp"
#include "subrie/nilpotent.hpp"

namespace subrie {

/// v -> (->exp int X_{u+v(s)} ds (base), v(1)) on [0,1] with v in the sine basis of size N.
struct EndpointProblem {
    Frame frame;
    Eigen::VectorXd base;
    Eigen::VectorXd u;
    int N = 4;

    static EndpointProblem from_nilpotent(const NilpotentFrame& nf, const Eigen::VectorXd& u, int N = 4);
    static EndpointProblem from_structure(const SRStructure& s, const Eigen::VectorXd& p, const Eigen::VectorXd& u,
                                          int N = 4);
    int dim() const { return static_cast<int>(base.size()); }
    int rank() const { return static_cast<int>(u.size()); }
    LinearControlFamily family() const;
};

struct EndpointValue {
    Eigen::VectorXd point;
    Eigen::VectorXd final_control;
    Eigen::VectorXd stacked() const;
};

/// coeffs is N x m.
EndpointValue endpoint_map(const EndpointProblem& prob, const Eigen::MatrixXd& coeffs, const FlowOptions& opts = {});
/// (d+m) x (N m) matrix; column i*N + k is the direction phi_k e_i.
Eigen::MatrixXd endpoint_differential(const EndpointProblem& prob, const Eigen::MatrixXd& coeffs,
                                      const FlowOptions& opts = {});

struct PliabilityOptions {
    double eta = 0.1;
    std::vector<int> N_schedule{4, 6, 8};
    int restarts = 6;
    std::uint64_t seed = 1;
    double submersion_tol = 1e-8;
    double residual_tol = 1e-9;
    double integration_tol = 1e-12;
    int newton_iterations = 30;
};

enum class PliabilityVerdict { Submersion, RemarkTrivial, NotFound };
std::string to_string(PliabilityVerdict v);

struct SubmersionCertificate {
    PliabilityVerdict verdict = PliabilityVerdict::NotFound;
    Eigen::MatrixXd coeffs;  // N x m
    int N = 0;
    double sup_norm = 0.0;
    double residual = 0.0;
    Eigen::VectorXd singular_values;
    double sigma_ratio = 0.0;  // sigma_min / sigma_1
    double eta = 0.0;
    double submersion_tol = 0.0;
    double residual_tol = 0.0;
    std::uint64_t seed = 0;
    int attempts = 0;
    std::string note;

    bool found() const { return verdict != PliabilityVerdict::NotFound; }
};

SubmersionCertificate strong_pliability_search(const EndpointProblem& prob, const PliabilityOptions& opts = {});

/// Recomputes residual and singular values from the stored control.
SubmersionCertificate replay_certificate(const EndpointProblem& prob, const SubmersionCertificate& cert);

/// Transported covector lambda_t = J^T lambda, J the differential of e^{(1-t) X_u} at e^{t X_u}(0).
Eigen::VectorXd transport_covector(const NilpotentFrame& nf, const Eigen::VectorXd& u, const Eigen::VectorXd& lambda,
                                   double t, Eigen::VectorXd* base_point = nullptr);

/// lambda_t . [X_{v1}, X_{v2}](gamma(t)).
double goh_form(const NilpotentFrame& nf, const Eigen::VectorXd& u, const Eigen::VectorXd& lambda, double t,
                const Eigen::VectorXd& v1, const Eigen::VectorXd& v2);
/// lambda_t . [[X_u, X_{v1}], X_{v2}](gamma(t)).
double legendre_form(const NilpotentFrame& nf, const Eigen::VectorXd& u, const Eigen::VectorXd& lambda, double t,
                     const Eigen::VectorXd& v1, const Eigen::VectorXd& v2);

struct SpanReport {
    bool spanning = false;
    std::vector<int> dims;  // span dimension after including (ad X_u)^k, k = 0..kmax
};

/// Span at 0 of (ad X_u)^k applied to Delta^2 generators, k <= kmax (default step - 1).
SpanReport goh_spanning_check(const NilpotentFrame& nf, const Eigen::VectorXd& u, std::optional<int> kmax = std::nullopt,
                              double rank_tol = 1e-9);

struct ConeReport {
    bool full = false;
    std::vector<Eigen::VectorXd> generators;
    std::vector<double> residuals;  // per target +e_1, -e_1, ..., +e_d, -e_d
    int sample_count = 0;
    std::uint64_t seed = 0;
};

/// Cone condition on a step-3 nilpotent frame; throws InputError otherwise.
ConeReport cone_condition(const NilpotentFrame& nf, const Eigen::VectorXd& u, int sample_count, std::uint64_t seed,
                          double feasibility_tol = 1e-8);

struct MediumFatReport {
    bool medium_fat = false;
    bool trivial = false;  // X_u(p) = 0: the pair reduces to (q,0)
    int rank = 0;
    std::string note;
};

MediumFatReport medium_fat_check(const SRStructure& s, const Eigen::VectorXd& p, const Eigen::VectorXd& u,
                                 double rank_tol = 1e-9);

struct GohWitness {
    Eigen::VectorXd lambda;
    double t = 0.0;
    int i = 0, j = 0;  // basis directions e_i, e_j
    double goh = 0.0;
    double legendre = 0.0;
};

/// For each lambda in an orthonormal basis of (Im D_0 F)^perp (state part), scans t on a grid and
/// basis pairs, keeping the largest |B_G| and |B_L| witnesses.
std::vector<GohWitness> goh_legendre_screen(const NilpotentFrame& nf, const Eigen::VectorXd& u, int N = 6,
                                            int t_samples = 5, double rank_tol = 1e-9);

}  // namespace subrie

#endif  // SUBRIE_ENDPOINT_HPP
