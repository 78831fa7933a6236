#include <cstdio>
#include <sstream>

#include "physcal/error.hpp"
#include "physcal/experiment.hpp"

namespace physcal {

using nlohmann::json;

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

json model_json(const ModelSnapshot& m) {
    return {{"lengthscales", m.lengthscales},
            {"signal_variance", m.signal_variance},
            {"nugget", m.nugget},
            {"mean_offset", m.mean_offset}};
}

ModelSnapshot model_from_json(const json& j) {
    ModelSnapshot m;
    m.lengthscales = j.at("lengthscales").get<std::vector<double>>();
    m.signal_variance = j.at("signal_variance").get<double>();
    m.nugget = j.at("nugget").get<double>();
    m.mean_offset = j.at("mean_offset").get<double>();
    return m;
}

}  // namespace

ReportFormat report_format_from_string(const std::string& s) {
    if (s == "json") return ReportFormat::json;
    if (s == "csv") return ReportFormat::csv;
    if (s == "md" || s == "markdown" || s == "markdown-table") return ReportFormat::markdown;
    throw ConfigError("unknown report format '" + s + "'");
}

json summary_to_json(const SummaryReport& s) {
    json runs = json::array();
    for (const RunSummary& r : s.runs) {
        runs.push_back({{"strategy", r.strategy},
                        {"replication", r.replication},
                        {"seed", r.seed},
                        {"status", r.status},
                        {"message", r.message},
                        {"mae", r.mae},
                        {"mse", r.mse},
                        {"add_failures", r.add_failures},
                        {"queries", r.queries},
                        {"fallbacks", r.fallbacks},
                        {"init_failures", r.init_failures},
                        {"oracle_calls", r.oracle_calls},
                        {"trace_file", r.trace_file},
                        {"target_model", model_json(r.target_model)},
                        {"constraint_model", model_json(r.constraint_model)}});
    }
    json aggregates = json::array();
    for (const StrategyAggregate& a : s.aggregates) {
        aggregates.push_back({{"strategy", a.strategy},
                              {"runs", a.runs},
                              {"mean_mae", a.mean_mae},
                              {"std_mae", a.std_mae},
                              {"mean_mse", a.mean_mse},
                              {"std_mse", a.std_mse},
                              {"mean_failures", a.mean_failures},
                              {"std_failures", a.std_failures},
                              {"zero_failure_runs", a.zero_failure_runs},
                              {"aborted_runs", a.aborted_runs}});
    }
    return {{"schema_version", s.schema_version},
            {"problem", s.problem},
            {"N", s.N},
            {"replications", s.replications},
            {"seed", s.seed},
            {"strategies", s.strategies},
            {"runs", runs},
            {"aggregates", aggregates}};
}

SummaryReport summary_from_json(const json& j) {
    SummaryReport s;
    try {
        s.schema_version = j.at("schema_version").get<int>();
        if (s.schema_version != kSummarySchemaVersion) {
            throw ConfigError("unsupported summary schema version " + std::to_string(s.schema_version));
        }
        s.problem = j.at("problem").get<std::string>();
        s.N = j.at("N").get<int>();
        s.replications = j.at("replications").get<int>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.strategies = j.at("strategies").get<std::vector<std::string>>();
        for (const json& r : j.at("runs")) {
            RunSummary x;
            x.strategy = r.at("strategy").get<std::string>();
            x.replication = r.at("replication").get<int>();
            x.seed = r.at("seed").get<std::uint64_t>();
            x.status = r.at("status").get<std::string>();
            x.message = r.at("message").get<std::string>();
            x.mae = r.at("mae").get<double>();
            x.mse = r.at("mse").get<double>();
            x.add_failures = r.at("add_failures").get<int>();
            x.queries = r.at("queries").get<int>();
            x.fallbacks = r.at("fallbacks").get<int>();
            x.init_failures = r.at("init_failures").get<int>();
            x.oracle_calls = r.at("oracle_calls").get<int>();
            x.trace_file = r.at("trace_file").get<std::string>();
            x.target_model = model_from_json(r.at("target_model"));
            x.constraint_model = model_from_json(r.at("constraint_model"));
            s.runs.push_back(std::move(x));
        }
        for (const json& a : j.at("aggregates")) {
            StrategyAggregate x;
            x.strategy = a.at("strategy").get<std::string>();
            x.runs = a.at("runs").get<int>();
            x.mean_mae = a.at("mean_mae").get<double>();
            x.std_mae = a.at("std_mae").get<double>();
            x.mean_mse = a.at("mean_mse").get<double>();
            x.std_mse = a.at("std_mse").get<double>();
            x.mean_failures = a.at("mean_failures").get<double>();
            x.std_failures = a.at("std_failures").get<double>();
            x.zero_failure_runs = a.at("zero_failure_runs").get<int>();
            x.aborted_runs = a.at("aborted_runs").get<int>();
            s.aggregates.push_back(std::move(x));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed summary: ") + e.what());
    }
    return s;
}

std::string render_json(const SummaryReport& s) { return summary_to_json(s).dump(2) + "\n"; }

std::string render_markdown(const SummaryReport& s) {
    std::ostringstream os;
    os << "| Rep |";
    for (const std::string& name : s.strategies) os << ' ' << name << " MAE | " << name << " MSE | " << name << " # Add. Fail |";
    os << "\n|---|";
    for (std::size_t k = 0; k < s.strategies.size(); ++k) os << "---:|---:|---:|";
    os << '\n';
    if (s.strategies.empty()) return os.str();

    for (int rep = 0; rep < s.replications; ++rep) {
        os << "| " << rep + 1 << " |";
        for (const std::string& name : s.strategies) {
            const RunSummary* r = s.find(name, rep);
            if (!r || r->status == "error") {
                os << " - | - | - |";
            } else {
                os << ' ' << fmt("%.4g", r->mae) << " | " << fmt("%.4g", r->mse) << " | " << r->add_failures << " |";
            }
        }
        os << '\n';
    }
    os << "| Mean |";
    for (const std::string& name : s.strategies) {
        const StrategyAggregate* a = s.aggregate(name);
        os << ' ' << fmt("%.4g", a ? a->mean_mae : 0.0) << " | " << fmt("%.4g", a ? a->mean_mse : 0.0) << " | "
           << fmt("%.2f", a ? a->mean_failures : 0.0) << " |";
    }
    os << "\n| (Std.) |";
    for (const std::string& name : s.strategies) {
        const StrategyAggregate* a = s.aggregate(name);
        os << " (" << fmt("%.4g", a ? a->std_mae : 0.0) << ") | (" << fmt("%.4g", a ? a->std_mse : 0.0) << ") | ("
           << fmt("%.2f", a ? a->std_failures : 0.0) << ") |";
    }
    os << '\n';
    return os.str();
}

std::string render_csv(const SummaryReport& s) {
    std::ostringstream os;
    os << "strategy,replication,seed,status,mae,mse,add_failures,queries,fallbacks,init_failures,oracle_calls\n";
    for (const RunSummary& r : s.runs) {
        os << r.strategy << ',' << r.replication << ',' << r.seed << ',' << r.status << ',' << fmt("%.17g", r.mae)
           << ',' << fmt("%.17g", r.mse) << ',' << r.add_failures << ',' << r.queries << ',' << r.fallbacks << ','
           << r.init_failures << ',' << r.oracle_calls << '\n';
    }
    return os.str();
}

std::string render(const SummaryReport& s, ReportFormat format) {
    switch (format) {
        case ReportFormat::json: return render_json(s);
        case ReportFormat::csv: return render_csv(s);
        case ReportFormat::markdown: return render_markdown(s);
    }
    return {};
}

std::string render_sweep_markdown(const SweepReport& r) {
    std::ostringstream os;
    os << "| " << r.param << " | strategy | mean MSE | mean MAE | mean # Add. Fail | zero-failure runs |\n";
    os << "|---:|---|---:|---:|---:|---:|\n";
    for (const SweepRow& row : r.rows) {
        for (const StrategyAggregate& a : row.summary.aggregates) {
            os << "| " << fmt("%g", row.value) << " | " << a.strategy << " | " << fmt("%.4g", a.mean_mse) << " | "
               << fmt("%.4g", a.mean_mae) << " | " << fmt("%.2f", a.mean_failures) << " | " << a.zero_failure_runs
               << "/" << a.runs << " |\n";
        }
    }
    return os.str();
}

json sweep_to_json(const SweepReport& r) {
    json rows = json::array();
    for (const SweepRow& row : r.rows) {
        json aggs = json::array();
        for (const StrategyAggregate& a : row.summary.aggregates) {
            aggs.push_back({{"strategy", a.strategy},
                            {"mean_mse", a.mean_mse},
                            {"mean_mae", a.mean_mae},
                            {"mean_failures", a.mean_failures},
                            {"zero_failure_runs", a.zero_failure_runs},
                            {"runs", a.runs}});
        }
        rows.push_back({{"value", row.value}, {"aggregates", aggs}});
    }
    return {{"schema_version", kSummarySchemaVersion}, {"param", r.param}, {"rows", rows}};
}

}  // namespace physcal
