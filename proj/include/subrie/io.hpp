#ifndef SUBRIE_IO_HPP
#define SUBRIE_IO_HPP

#include <Eigen/Core>
#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "subrie/distance.hpp"
#include "subrie/endpoint.hpp"
#include "subrie/lift.hpp"
#include "subrie/nilpotent.hpp"
#include "subrie/whitney.hpp"

namespace subrie {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Everything that influences a run; embedded in every report.
struct RunConfig {
    std::uint64_t seed = 1;
    double integration_tol = 1e-10;
    double rank_tol = 1e-9;
    double submersion_tol = 1e-8;
    double residual_tol = 1e-9;
    double eta = 0.1;
    WhitneyThresholds thresholds;
    DistanceBudget distance;
    DistanceBudget pair_distance = WhitneyOptions{}.budget;
    std::vector<int> pliability_N{4, 6, 8};
    int pliability_restarts = 6;
    std::vector<int> extend_N{6, 12, 24};
    int extend_restarts = 3;
    int cone_samples = 64;
    std::string output_dir = ".";
};

// --- CSV ------------------------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Comma separated, '.' decimal, mandatory header row; blank lines skipped.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const CsvTable& t);
void write_csv_file(const std::string& path, const CsvTable& t);
std::string format_double(double v);

/// Header t, x1..xd, u1..um.
WhitneyData whitney_from_csv(const CsvTable& t, int dim, int rank);
CsvTable whitney_to_csv(const WhitneyData& data);

/// Header t, u1..um on a uniform time grid.
Control control_from_csv(const CsvTable& t, Control::Interp interp = Control::Interp::Linear);
/// Sampled controls are written at their nodes; other kinds at `samples` uniform times plus
/// both sides of every breakpoint.
CsvTable control_to_csv(const Control& c, int samples = 201);
/// Header t, x1..xd, u1..um.
CsvTable trajectory_to_csv(const Trajectory& traj, const std::vector<double>& times);
std::vector<double> uniform_times(double t0, double t1, int samples);

/// Comma-separated numbers, e.g. "0,0,1".
Eigen::VectorXd parse_vector(const std::string& text);

// --- JSON -----------------------------------------------------------------------------------

void to_json(json& j, const RunConfig& c);
void to_json(json& j, const DistanceBudget& b);
void to_json(json& j, const WhitneyThresholds& t);
void to_json(json& j, const FlagReport& r);
void to_json(json& j, const RegularityMap& r);
void to_json(json& j, const PrivilegedChart& c);
void to_json(json& j, const NilpotentFrame& nf);
void to_json(json& j, const ConvergenceTable& t);
void to_json(json& j, const SubmersionCertificate& c);
void to_json(json& j, const SpanReport& r);
void to_json(json& j, const ConeReport& r);
void to_json(json& j, const MediumFatReport& r);
void to_json(json& j, const GohWitness& w);
void to_json(json& j, const DistanceEstimate& e);
void to_json(json& j, const BallBoxCalibration& c);
void to_json(json& j, const DefectBucket& b);
void to_json(json& j, const PairDefect& p);
void to_json(json& j, const ModulusReport& r);
void to_json(json& j, const DilationReport& r);
void to_json(json& j, const GapDiagnostic& g);
void to_json(json& j, const ExtensionResult& r);
void to_json(json& j, const LusinResult& r);
void to_json(json& j, const LiftCheck& c);
void to_json(json& j, const GapLift& g);
void to_json(json& j, const LiftedData& d);
void to_json(json& j, const ProjectionCheck& c);

/// Inverse of to_json(PrivilegedChart).
PrivilegedChart chart_from_json(const json& j);

json vector_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const json& j);

}  // namespace subrie

#endif  // SUBRIE_IO_HPP
