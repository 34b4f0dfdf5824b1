#include "mfgc/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "mfgc/assumptions.hpp"
#include "mfgc/cli/config.hpp"
#include "mfgc/cli/output.hpp"
#include "mfgc/coupler.hpp"
#include "mfgc/errors.hpp"
#include "mfgc/mufix.hpp"

namespace fs = std::filesystem;

namespace mfgc::cli {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool wants(const RunConfig& cfg, const char* format) {
    return std::find(cfg.formats.begin(), cfg.formats.end(), format) != cfg.formats.end();
}

SolveResult run(const RunConfig& cfg, const Model& model) {
    const TimeGrid tgrid(cfg.T, cfg.nt);
    const ScalarField m0 = build_initial_density(cfg, model.grid());
    if (!cfg.solver.continuation.empty()) return solve_with_continuation(model, tgrid, m0, cfg.solver);
    return solve(model, tgrid, m0, cfg.solver);
}

void write_outputs(const fs::path& dir, const RunConfig& cfg, const Model& model, const SolveResult& res) {
    fs::create_directories(dir);
    if (wants(cfg, "csv")) {
        write_field_csv((dir / "u.csv").string(), res.u_traj, res.tgrid);
        write_field_csv((dir / "m.csv").string(), res.m_traj, res.tgrid);
        write_field_csv((dir / "alpha.csv").string(), res.alpha_traj, res.tgrid);
    }
    if (wants(cfg, "json")) {
        std::ofstream js(dir / "summary.json", std::ios::binary);
        js << dump(summary_json(res, model, cfg.echo));
    }
}

double lambda_inf_max(const SolveResult& res) {
    double out = 0.0;
    for (std::size_t k = 0; k < res.m_traj.size(); ++k)
        out = std::max(out, lambda_moment(JointMeasure{res.m_traj[k], res.alpha_traj[k]}, kInfinity));
    return out;
}

double u_sup(const SolveResult& res) {
    double out = 0.0;
    for (const auto& u : res.u_traj) out = std::max(out, sup_norm(u.values()));
    return out;
}

std::string one_line(const SolveResult& res) {
    std::ostringstream os;
    os << "converged=" << (res.converged ? "true" : "false") << " outer_iterations=" << res.outer_iterations
       << " final_residual="
       << (res.residual_history.empty() ? std::string("nan") : format_double(res.residual_history.back()))
       << (res.converged && res.diagnostics.verified() ? " VERIFIED" : " NOT-VERIFIED");
    return os.str();
}

int exit_code(const SolveResult& res) {
    if (!res.converged) return kExitNoConvergence;
    return res.diagnostics.verified() ? kExitOk : kExitUnverified;
}

struct SweepRow {
    double value = 0.0;
    bool ok = false;
    SolveResult result;
    std::string error;
};

} // namespace

std::vector<double> parse_value_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        std::size_t used = 0;
        const double v = std::stod(item.substr(b), &used);
        if (item.find_first_not_of(" \t", b + used) != std::string::npos)
            throw std::invalid_argument("bad number '" + item + "'");
        out.push_back(v);
    }
    return out;
}

int cmd_solve(const std::string& config_path, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    std::optional<Model> model;
    try {
        cfg = load_config(config_path);
        model.emplace(build_model(cfg));
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }

    SolveResult res;
    try {
        res = run(cfg, *model);
    } catch (const mfgc::Error& e) {
        err << "solve failed: " << e.what() << "\n";
        return kExitNoConvergence;
    }
    const fs::path dir = resolve_output_dir(cfg);
    try {
        write_outputs(dir, cfg, *model, res);
    } catch (const std::exception& e) {
        err << "output error: " << e.what() << "\n";
        return kExitConfigError;
    }
    out << one_line(res) << " out=" << dir.string() << "\n";
    return exit_code(res);
}

int cmd_sweep(const std::string& config_path, const std::string& key, const std::vector<double>& values,
              std::size_t threads, std::ostream& out, std::ostream& err) {
    if (values.empty()) {
        err << "sweep: empty value list\n";
        return kExitConfigError;
    }
    std::string text;
    RunConfig base;
    try {
        text = read_file(config_path);
        base = with_override(text, config_path, key, values.front());
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }
    const fs::path dir = resolve_output_dir(base);

    std::vector<SweepRow> rows(values.size());
    std::atomic<std::size_t> next{0};
    std::mutex log;
    auto worker = [&] {
        for (std::size_t k = next++; k < values.size(); k = next++) {
            SweepRow& row = rows[k];
            row.value = values[k];
            try {
                const RunConfig cfg = with_override(text, config_path, key, values[k]);
                const Model model = build_model(cfg);
                row.result = run(cfg, model);
                write_outputs(dir / ("run_" + std::to_string(k)), cfg, model, row.result);
                row.ok = true;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            std::lock_guard lock(log);
            out << key << "=" << format_double(values[k]) << " "
                << (row.ok ? one_line(row.result) : "error: " + row.error) << "\n";
        }
    };
    const std::size_t n_workers = std::clamp<std::size_t>(threads, 1, values.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    fs::create_directories(dir);
    std::ofstream csv(dir / "sweep.csv", std::ios::binary);
    csv << "value,converged,outer_iterations,final_residual,u_sup,lambda_inf_max,mass_max_dev,m_min,"
           "energy_identity_residual,lambda_bound_margin,max_principle_margin,verified,error\n";
    bool all_converged = true;
    for (const auto& row : rows) {
        csv << format_double(row.value) << ',';
        if (!row.ok) {
            all_converged = false;
            std::string msg = row.error;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            csv << "false,0,nan,nan,nan,nan,nan,nan,nan,nan,false," << msg << '\n';
            continue;
        }
        const auto& r = row.result;
        const auto& d = r.diagnostics;
        all_converged = all_converged && r.converged;
        csv << (r.converged ? "true" : "false") << ',' << r.outer_iterations << ','
            << format_double(r.residual_history.empty() ? 0.0 : r.residual_history.back()) << ','
            << format_double(u_sup(r)) << ',' << format_double(lambda_inf_max(r)) << ','
            << format_double(d.mass_max_dev) << ',' << format_double(d.m_min) << ','
            << format_double(d.energy_identity_residual) << ',' << format_double(d.lambda_bound_margin) << ','
            << (d.max_principle_margin ? format_double(*d.max_principle_margin) : std::string("nan")) << ','
            << (r.converged && d.verified() ? "true" : "false") << ",\n";
    }
    out << "sweep.csv written to " << (dir / "sweep.csv").string() << "\n";
    return all_converged ? kExitOk : kExitNoConvergence;
}

int cmd_check(const std::string& config_path, const CheckOptions& opts, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    std::optional<Model> model;
    try {
        cfg = load_config(config_path);
        model.emplace(build_model(cfg));
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }
    const std::size_t samples = opts.samples.value_or(cfg.check.samples);
    const std::uint64_t seed = opts.seed.value_or(cfg.seed);

    AssumptionReport rep;
    try {
        rep = verify_sampled(*model, samples, seed, cfg.check.p_max);
    } catch (const mfgc::Error& e) {
        err << "check failed: " << e.what() << "\n";
        return kExitConfigError;
    }

    nlohmann::json report = to_json(rep);
    report["model"] = variant_name(model->spec());
    std::size_t violations = rep.total_violations();

    out << "model " << variant_name(model->spec()) << ", " << samples << " samples, seed " << seed << "\n";
    for (const auto& c : rep.checks) {
        out << "  " << c.name << ": ";
        if (!c.declared) {
            out << "not declared\n";
            continue;
        }
        out << c.violations << " violations, worst margin " << format_double(c.worst_margin) << "\n";
        if (c.witness) {
            const auto& w = *c.witness;
            out << "    witness: sample " << w.sample_index << " node " << w.node << " x=" << format_double(w.x)
                << " p=" << format_double(w.p) << " lhs=" << format_double(w.lhs) << " rhs=" << format_double(w.rhs)
                << "\n";
        }
    }
    if (rep.small_param)
        out << "  small-parameter: lhs=" << format_double(rep.small_param->lhs)
            << " rhs=" << format_double(rep.small_param->rhs) << (rep.small_param->ok ? " holds" : " fails") << "\n";

    if (const auto* c = std::get_if<CrowdMotion>(&model->spec())) {
        try {
            const CrowdRegion region =
                crowd_existence_region(c->theta, c->lambda_tilde, c->a, c->b, c->q0, c->kernel.is_constant());
            std::string labels;
            for (const auto& l : region.labels()) labels += (labels.empty() ? "" : ",") + l;
            out << "  existence cases: " << labels << "\n";
            report["existence_cases"] = region.labels();
        } catch (const mfgc::Error& e) {
            out << "  existence cases: unavailable (" << e.what() << ")\n";
        }
    }

    const std::size_t tuples = opts.h4_tuples ? opts.h4_tuples : cfg.check.h4_tuples;
    if (tuples > 0) {
        const H4Sweep sw = h4_sweep(tuples, seed);
        out << "  kernel-gradient positivity bound: " << tuples << " tuples, min eigenvalue " << format_double(sw.min_eigenvalue)
            << ", " << sw.below_one << " below 1, max path disagreement " << format_double(sw.max_relative_disagreement)
            << "\n";
        if (sw.below_one > 0)
            out << "    witness: r=" << format_double(sw.worst_r) << " s=" << format_double(sw.worst_s)
                << " k=" << format_double(sw.worst_k) << " chi=" << format_double(sw.worst_chi) << "\n";
        report["h4"] = {{"tuples", tuples},
                        {"min_eigenvalue", sw.min_eigenvalue},
                        {"below_one", sw.below_one},
                        {"max_relative_disagreement", sw.max_relative_disagreement},
                        {"worst", {sw.worst_r, sw.worst_s, sw.worst_k, sw.worst_chi}}};
        violations += sw.below_one;
    }

    try {
        const fs::path dir = resolve_output_dir(cfg);
        fs::create_directories(dir);
        std::ofstream js(dir / "check.json", std::ios::binary);
        js << dump(report);
    } catch (const std::exception& e) {
        err << "output error: " << e.what() << "\n";
    }
    out << (violations == 0 ? "no violations" : std::to_string(violations) + " violations") << "\n";
    return violations == 0 ? kExitOk : kExitViolations;
}

int cmd_diagnose(const std::string& run_dir, std::ostream& out, std::ostream& err) {
    const fs::path dir(run_dir);
    nlohmann::json summary;
    RunConfig cfg;
    std::optional<Model> model;
    try {
        std::ifstream in(dir / "summary.json");
        if (!in) throw ConfigError((dir / "summary.json").string() + ": cannot open");
        summary = nlohmann::json::parse(in);
        if (!summary.contains("config_echo")) throw ConfigError("summary.json has no config_echo");
        cfg = config_from_echo(summary["config_echo"]);
        model.emplace(build_model(cfg));
    } catch (const std::exception& e) {
        err << "diagnose: " << e.what() << "\n";
        return kExitConfigError;
    }

    SolveResult res;
    res.tgrid = TimeGrid(cfg.T, cfg.nt);
    try {
        const auto u = read_field_csv((dir / "u.csv").string(), cfg.n);
        const auto m = read_field_csv((dir / "m.csv").string(), cfg.n);
        const auto a = read_field_csv((dir / "alpha.csv").string(), cfg.n);
        if (u.size() != cfg.nt + 1 || m.size() != cfg.nt + 1 || a.size() != cfg.nt + 1)
            throw std::runtime_error("field files do not have nt+1 time levels");
        const TorusGrid& g = model->grid();
        for (std::size_t k = 0; k <= cfg.nt; ++k) {
            res.u_traj.emplace_back(g, u[k]);
            res.m_traj.emplace_back(g, m[k]);
            res.alpha_traj.emplace_back(g, a[k]);
        }
    } catch (const std::exception& e) {
        err << "diagnose: " << e.what() << "\n";
        return kExitConfigError;
    }

    DiagnosticsReport rep;
    try {
        rep = diagnose(res, *model);
    } catch (const mfgc::Error& e) {
        err << "diagnose: " << e.what() << "\n";
        return kExitConfigError;
    }
    const bool converged = summary.value("converged", false);
    nlohmann::json j = to_json(rep);
    j["converged"] = converged;
    out << dump(j);
    out << (rep.verified() ? "VERIFIED" : "NOT-VERIFIED") << "\n";
    return rep.verified() ? kExitOk : kExitUnverified;
}

} // namespace mfgc::cli
