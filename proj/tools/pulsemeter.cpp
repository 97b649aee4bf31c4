// pulsemeter: simulate packet-pair measurements over pulsed-interference
// channels and estimate the interference temporal statistics from loss data.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "pulse/csv.hpp"
#include "pulse/experiment.hpp"
#include "pulse/gilbert_elliott.hpp"
#include "pulse/linksim.hpp"
#include "pulse/nonparam.hpp"
#include "pulse/random.hpp"
#include "pulse/stats.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNoConvergence = 3;

struct CommonOpts {
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned workers = 0;
};

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::invalid_argument("cannot create output dir " + dir);
    std::ofstream probe(dir + "/.write_probe");
    if (!probe) throw std::invalid_argument("output dir not writable: " + dir);
    probe.close();
    std::filesystem::remove(dir + "/.write_probe", ec);
}

unsigned effective_workers(unsigned requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

int cmd_simulate(const std::string& config_path, const CommonOpts& opts,
                 const std::string& out_override) {
    pulse::KeyValueConfig kv = pulse::KeyValueConfig::load(config_path);
    if (opts.seed_set) kv.set("seed", std::to_string(opts.seed));
    if (!out_override.empty()) kv.set("output.dir", out_override);
    pulse::ExperimentConfig cfg = pulse::ExperimentConfig::from_config(kv);
    ensure_dir(cfg.output_dir);

    auto out = pulse::run_experiment(cfg, effective_workers(opts.workers));
    pulse::export_records(out.records, cfg.output_dir + "/records.csv");
    pulse::export_loss_curve(out.curve, cfg.output_dir + "/loss_curve.csv");
    {
        std::ofstream resolved(cfg.output_dir + "/resolved.cfg");
        cfg.write_resolved(resolved);
    }
    for (const auto& line : out.point_summaries) std::cout << line << '\n';
    for (const auto& w : out.curve.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "wrote " << cfg.output_dir << "/records.csv and loss_curve.csv\n";
    return kExitOk;
}

// Input sniffing: records files have 5 columns, loss curves 12.
bool looks_like_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input: " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        return pulse::csv::split(line).size() == 5;
    }
    throw pulse::ParseError(1, "input file is empty");
}

int cmd_estimate(const std::string& input, const std::string& method_name,
                 double confidence, const CommonOpts& opts) {
    pulse::EstimatorMethod method = pulse::method_from_string(method_name);
    ensure_dir(opts.out_dir);

    pulse::LossCurve curve;
    if (looks_like_records(input)) {
        auto records = pulse::import_records(input);
        if (records.empty()) throw pulse::ParseError(1, "no records in " + input);
        curve = pulse::estimate_loss_curve(records, confidence);
    } else {
        curve = pulse::import_loss_curve(input, confidence);
        if (curve.points.empty()) throw pulse::ParseError(1, "no points in " + input);
    }
    for (const auto& w : curve.warnings) std::cerr << "warning: " << w << '\n';

    if (method == pulse::EstimatorMethod::Param) {
        pulse::FitOptions fit_options;
        fit_options.init = pulse::GEParams{20.0, 222.0, 0.0, 0.5, 0.0};
        auto fit = pulse::fit_ml(curve, fit_options);
        {
            std::ofstream report(opts.out_dir + "/fit_report.txt");
            pulse::write_fit_report(fit, report);
            std::ofstream fitted(opts.out_dir + "/fit_curve.csv");
            pulse::write_fit_curve(curve, fit.params, fitted);
        }
        std::cout << "lambda_b_hz=" << pulse::csv::format(fit.params.lambda_b)
                  << " p_b=" << pulse::csv::format(fit.params.p_b)
                  << " p_g=" << pulse::csv::format(fit.params.p_g)
                  << " p_cs=" << pulse::csv::format(fit.params.p_cs())
                  << " residual=" << pulse::csv::format(fit.residual) << '\n';
        if (fit.identifiability_warning)
            std::cerr << "warning: alpha and p_g are weakly identified; consider "
                         "pinning one of them\n";
        if (!fit.converged) {
            std::cerr << "error: fit did not converge after " << fit.iterations
                      << " iterations\n";
            return kExitNoConvergence;
        }
        return kExitOk;
    }

    pulse::CcdfEstimate est;
    try {
        est = (method == pulse::EstimatorMethod::Direct)
                  ? pulse::recover_ccdf_direct(curve)
                  : pulse::recover_ccdf_bias_corrected(curve);
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNoConvergence;
    }
    pulse::export_ccdf(est, opts.out_dir + "/ccdf.csv");
    {
        std::ofstream report(opts.out_dir + "/estimate_report.txt");
        report << "method=" << pulse::to_string(method) << '\n'
               << "mean_pulse_duration_s=" << pulse::csv::format(est.mean_pulse_duration)
               << '\n'
               << "mean_gap_s=" << pulse::csv::format(est.mean_gap) << '\n'
               << "mean_cycle_s=" << pulse::csv::format(est.mean_cycle) << '\n'
               << "residual_norm=" << pulse::csv::format(est.residual_norm) << '\n'
               << "degenerate=" << (est.degenerate ? 1 : 0) << '\n';
    }
    for (const auto& w : est.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "mean_pulse_duration_s=" << pulse::csv::format(est.mean_pulse_duration)
              << " mean_gap_s=" << pulse::csv::format(est.mean_gap)
              << " residual_norm=" << pulse::csv::format(est.residual_norm) << '\n';
    std::cout << "wrote " << opts.out_dir << "/ccdf.csv\n";
    return kExitOk;
}

int cmd_reproduce(const std::string& figure_id, const CommonOpts& opts) {
    ensure_dir(opts.out_dir);
    std::uint64_t seed = opts.seed_set ? opts.seed : 1;
    auto files = pulse::reproduce_figure(figure_id, opts.out_dir, seed,
                                         effective_workers(opts.workers));
    for (const auto& f : files) std::cout << "wrote " << f << '\n';
    return kExitOk;
}

int cmd_trace_import(const std::string& input, const CommonOpts& opts,
                     bool have_out) {
    pulse::PulseTrain train = pulse::import_pulse_trace(input);
    std::cout << "pulses=" << train.size()
              << " horizon_s=" << pulse::csv::format(train.horizon())
              << " occupancy=" << pulse::csv::format(train.occupancy_fraction()) << '\n';
    auto gaps = train.gaps();
    if (!gaps.empty()) {
        double mean = 0.0;
        for (double g : gaps) mean += g;
        mean /= static_cast<double>(gaps.size());
        std::cout << "mean_gap_s=" << pulse::csv::format(mean) << '\n';
    }
    if (have_out) {
        ensure_dir(opts.out_dir);
        pulse::export_pulse_trace(train, opts.out_dir + "/imported_trace.csv");
        std::cout << "wrote " << opts.out_dir << "/imported_trace.csv\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pulsed-interference measurement toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string config_path;
    std::string input_path;
    std::string method = "direct";
    std::string figure_id;
    std::string out_flag;
    double confidence = 0.95;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", opts.seed, "master seed")->each([&](const std::string&) {
            opts.seed_set = true;
        });
        sub->add_option("--workers", opts.workers, "worker threads (default: cores)");
    };

    auto* simulate = app.add_subcommand("simulate", "run a loss-vs-duration sweep");
    simulate->add_option("--config", config_path, "experiment config file")->required();
    simulate->add_option("--out", out_flag, "output directory override");
    add_common(simulate);

    auto* estimate =
        app.add_subcommand("estimate", "recover interference statistics from loss data");
    estimate->add_option("input", input_path, "records CSV or loss-curve CSV")->required();
    estimate->add_option("--method", method, "direct | bias-corrected | param");
    estimate->add_option("--confidence", confidence, "confidence level in (0,1)");
    estimate->add_option("--out", opts.out_dir, "output directory");
    add_common(estimate);

    auto* reproduce = app.add_subcommand("reproduce", "run a canned experiment");
    reproduce->add_option("figure", figure_id, "fig4|fig5|fig9|fig10|fig11|fig12")
        ->required();
    reproduce->add_option("--out", opts.out_dir, "output directory");
    add_common(reproduce);

    auto* trace = app.add_subcommand("trace-import", "validate a pulse trace CSV");
    trace->add_option("input", input_path, "pulse trace CSV")->required();
    auto* trace_out = trace->add_option("--out", opts.out_dir, "output directory");
    add_common(trace);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(config_path, opts, out_flag);
        if (estimate->parsed()) return cmd_estimate(input_path, method, confidence, opts);
        if (reproduce->parsed()) return cmd_reproduce(figure_id, opts);
        if (trace->parsed())
            return cmd_trace_import(input_path, opts, trace_out->count() > 0);
    } catch (const pulse::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
