#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pulse/gilbert_elliott.hpp"
#include "pulse/interference.hpp"
#include "pulse/linksim.hpp"
#include "pulse/nonparam.hpp"
#include "pulse/stats.hpp"

namespace pulse {

enum class EstimatorMethod { Direct, BiasCorrected, Param };

EstimatorMethod method_from_string(const std::string& s);
std::string to_string(EstimatorMethod m);

// Flat key=value configuration with dotted section names; '#' starts a
// comment. Unknown keys are rejected so typos fail loudly.
class KeyValueConfig {
  public:
    static KeyValueConfig parse(std::istream& in);
    static KeyValueConfig load(const std::string& path);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // Keys that were present but never read; used to reject typos.
    std::vector<std::string> unread_keys() const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

  private:
    std::map<std::string, std::string> entries_;
    mutable std::map<std::string, bool> read_;
};

struct ExperimentConfig {
    InterferenceModel interference{PoissonImpulse{100.0}};
    double pair_rate = 30.0;        // bursts per second
    double sifs = 10e-6;
    bool carrier_sense = false;
    bool single_packet = false;
    double collision_prob = 0.0;
    ErasureModel erasure;
    std::vector<double> grid;       // window durations T_D, seconds
    std::int64_t packets_per_point = 10000;
    EstimatorMethod method = EstimatorMethod::Direct;
    double confidence = 0.95;
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    FitOptions fit;                 // parametric estimator settings

    void validate() const;  // throws std::invalid_argument naming the field

    static ExperimentConfig from_config(KeyValueConfig& kv);
    void write_resolved(std::ostream& out) const;
};

struct SimulationOutput {
    std::vector<TransmissionRecord> records;  // all grid points concatenated
    LossCurve curve;
    std::vector<std::string> point_summaries;  // one line per grid point
};

// Runs one link simulation per grid point (dispatched across `workers`
// threads) and aggregates the loss curve. Per-point seeds are derived from
// the master seed and the point index, so any single point can be re-run in
// isolation.
SimulationOutput run_experiment(const ExperimentConfig& config, unsigned workers = 1);

// Simulates a single grid point; used by run_experiment and by tests that
// need the per-point trains.
std::vector<TransmissionRecord> run_grid_point(const ExperimentConfig& config,
                                               std::size_t point_index);

// The pulse train a given grid point runs over (deterministic).
PulseTrain grid_point_train(const ExperimentConfig& config, std::size_t point_index);

// Canned experiment configurations for the reproduction subcommand; the ids
// are fig4, fig5, fig9, fig10, fig11 and fig12. Writes the data CSVs into
// output_dir and returns the list of files written. Unknown ids throw
// std::invalid_argument listing the valid ones.
std::vector<std::string> reproduce_figure(const std::string& figure_id,
                                          const std::string& output_dir,
                                          std::uint64_t seed, unsigned workers);

}  // namespace pulse
