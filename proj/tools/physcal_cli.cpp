#include <cstdio>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "physcal/error.hpp"
#include "physcal/experiment.hpp"
#include "physcal/problems.hpp"

using namespace physcal;

namespace {

void print_summary(const SummaryReport& s, const std::string& dir) {
    std::cout << render_markdown(s);
    for (const StrategyAggregate& a : s.aggregates) {
        std::cout << a.strategy << ": zero-failure runs " << a.zero_failure_runs << "/" << a.runs;
        if (a.aborted_runs > 0) std::cout << ", aborted " << a.aborted_runs;
        std::cout << '\n';
    }
    if (!dir.empty()) std::cout << "wrote " << dir << "/summary.json\n";
}

int calibrate(const std::string& name, std::uint64_t seed, const std::string& grid_out, int grid_side) {
    nlohmann::json out;
    ProblemSpec spec;
    if (name == "benchmark_2d") {
        const CalibrationResult r = calibrate_benchmark_2d(seed);
        spec = benchmark_2d_from_shape(benchmark_2d_shape(seed), r.amplitude);
        out = {{"problem", name},
               {"seed", seed},
               {"constraint_amplitude", r.amplitude},
               {"failure_ratio", r.failure_ratio},
               {"iterations", r.iterations},
               {"connected", r.connected}};
    } else if (name == "fuselage_10d" || name == "fuselage_10d_ms150") {
        const CalibrationResult r = calibrate_fuselage();
        spec = fuselage_from_scale(r.amplitude, name == "fuselage_10d" ? 1.25 : 1.5);
        out = {{"problem", name},
               {"stress_scale", r.amplitude},
               {"calibrated_failure_ratio_ms125", r.failure_ratio},
               {"iterations", r.iterations},
               {"failure_ratio", failure_ratio_estimate(spec, 20000)}};
    } else {
        spec = make_problem(name);
        out = {{"problem", name}, {"failure_ratio", failure_ratio_estimate(spec, 10000)}};
    }
    out["xi"] = spec.xi;
    std::cout << out.dump(2) << '\n';

    if (!grid_out.empty()) {
        if (spec.dim > 2) throw ConfigError("grid export is only available for 1-D and 2-D problems");
        std::ostringstream os;
        os.precision(17);
        os << (spec.dim == 1 ? "x0,f,h,safe\n" : "x0,x1,f,h,safe\n");
        const int side_y = spec.dim == 1 ? 1 : grid_side;
        for (int j = 0; j < side_y; ++j) {
            for (int i = 0; i < grid_side; ++i) {
                DesignPoint x(spec.dim);
                x[0] = spec.lower[0] + (i + 0.5) / grid_side * (spec.upper[0] - spec.lower[0]);
                if (spec.dim == 2) x[1] = spec.lower[1] + (j + 0.5) / grid_side * (spec.upper[1] - spec.lower[1]);
                os << x[0];
                if (spec.dim == 2) os << ',' << x[1];
                os << ',' << spec.target(x) << ',' << spec.constraint(x) << ',' << spec.truly_safe(x) << '\n';
            }
        }
        write_text_file(grid_out, os.str());
        std::cerr << "wrote " << grid_out << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Failure-averse active learning experiments"};
    app.require_subcommand(1);

    std::string config_path, output_dir, summary_path, format = "md", out_path, problem_name, param = "w", grid_out;
    int jobs = -1;
    int grid_side = 100;
    std::uint64_t seed = kCanonicalBenchmarkSeed;
    std::vector<double> values;

    CLI::App* run = app.add_subcommand("run", "Run a replicated experiment from a JSON config");
    run->add_option("config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--output-dir", output_dir, "Override the output directory");
    run->add_option("-j,--jobs", jobs, "Parallel replications (0 = all cores)");

    CLI::App* sweep = app.add_subcommand("sweep", "Repeat an experiment over values of one parameter");
    sweep->add_option("config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
    sweep->add_option("--param", param, "w, alpha, power, p_plus, gamma or N")->capture_default_str();
    sweep->add_option("--values", values, "Parameter values")->required()->expected(1, -1);
    sweep->add_option("-o,--output-dir", output_dir, "Override the output directory");
    sweep->add_option("-j,--jobs", jobs, "Parallel replications (0 = all cores)");

    CLI::App* report = app.add_subcommand("report", "Render a summary.json as a table");
    report->add_option("summary", summary_path, "summary.json")->required()->check(CLI::ExistingFile);
    report->add_option("--format", format, "md, csv or json")->capture_default_str();
    report->add_option("--out", out_path, "Write to a file instead of stdout");

    CLI::App* cal = app.add_subcommand("calibrate-problem", "Re-run the calibration of a benchmark problem");
    cal->add_option("name", problem_name, "Problem name")->required();
    cal->add_option("--seed", seed, "Shape seed of the 2-D benchmark")->capture_default_str();
    cal->add_option("--grid-out", grid_out, "Write f, h and the true safe set on a grid (CSV)");
    cal->add_option("--grid-side", grid_side, "Grid points per axis")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run || *sweep) {
            ExperimentConfig cfg = load_config(config_path);
            if (!output_dir.empty()) cfg.output_dir = output_dir;
            if (jobs >= 0) cfg.jobs = jobs;
            if (*run) {
                print_summary(run_experiment(cfg), cfg.output_dir);
            } else {
                const SweepReport r = run_sweep(cfg, param, values);
                std::cout << render_sweep_markdown(r) << "wrote " << cfg.output_dir << "/sweep.json\n";
            }
        } else if (*report) {
            const SummaryReport s = summary_from_json(nlohmann::json::parse(read_text_file(summary_path)));
            const std::string text = render(s, report_format_from_string(format));
            if (out_path.empty()) {
                std::cout << text;
            } else {
                write_text_file(out_path, text);
            }
        } else if (*cal) {
            return calibrate(problem_name, seed, grid_out, grid_side);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
