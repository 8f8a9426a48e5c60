#include "exbound/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "exbound/boundary.hpp"
#include "exbound/csv.hpp"
#include "exbound/gbm.hpp"
#include "exbound/oracle.hpp"
#include "exbound/ou.hpp"
#include "exbound/regime.hpp"
#include "exbound/solver.hpp"

namespace exbound {

namespace {

// ---------------------------------------------------------------------
// Logging (stderr only; CSV artifacts stay bitwise-deterministic).
// ---------------------------------------------------------------------

LogLevel g_level = LogLevel::Info;

#if defined(__GNUC__)
__attribute__((format(printf, 2, 3)))
#endif
void logf(LogLevel level, const char* fmt, ...) {
    if (level > g_level) return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::fprintf(stderr, "%s: [%s] ", kToolName,
                 names[static_cast<int>(level)]);
    va_list args;
    va_start(args, fmt);
    std::vfprintf(stderr, fmt, args);
    va_end(args);
    std::fputc('\n', stderr);
}

class Stopwatch {
  public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             start_)
            .count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------
// Manifest: config hash, versions and wall times next to the artifacts.
// ---------------------------------------------------------------------

class Manifest {
  public:
    Manifest(std::string subcommand, const RunConfig& cfg, int workers) {
        add("tool", std::string(kToolName) + " " + kToolVersion);
#if defined(__VERSION__)
        add("compiler", __VERSION__);
#endif
        add("subcommand", std::move(subcommand));
        add("config", cfg.source_name);
        add("config_hash", config_hash(cfg.raw_text));
        add("model", cfg.model.kind == ModelKind::Ou ? "ou" : "gbm");
        add("workers", std::to_string(workers));
    }

    void add(const std::string& key, std::string value) {
        lines_.emplace_back(key, std::move(value));
    }
    void add_artifact(const std::string& file) { add("artifact", file); }
    void add_seconds(const std::string& stage, double s) {
        add("wall_seconds." + stage, format_double(s));
    }

    void write(const std::filesystem::path& dir) const {
        const std::filesystem::path path = dir / "manifest.txt";
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        for (const auto& [k, v] : lines_) {
            out << k << " = " << v << "\n";
        }
        if (!out) {
            throw std::runtime_error("cannot write " + path.string());
        }
    }

  private:
    std::vector<std::pair<std::string, std::string>> lines_;
};

// ---------------------------------------------------------------------
// Model plumbing shared by the subcommands.
// ---------------------------------------------------------------------

struct Engine {
    std::shared_ptr<const OuModel> ou;  // null for the lognormal model
    std::unique_ptr<EepBackend> backend;
};

Engine make_engine(const ModelSpec& spec) {
    Engine e;
    if (spec.kind == ModelKind::Ou) {
        e.ou = std::make_shared<OuModel>(spec);
        e.backend = std::make_unique<OuBackend>(e.ou);
    } else {
        e.backend = std::make_unique<GbmBackend>(spec);
    }
    return e;
}

const char* band_name(RegionShape shape) {
    switch (shape) {
        case RegionShape::Empty: return "empty";
        case RegionShape::BelowStrike: return "{X < K}";
        case RegionShape::BelowRatio: return "{X < K r/q}";
        case RegionShape::Band: return "{K r/q < X < K}";
    }
    return "?";
}

const char* state_name(NodeState state) {
    switch (state) {
        case NodeState::Empty: return "empty";
        case NodeState::Single: return "single";
        case NodeState::Double: return "double";
    }
    return "?";
}

std::vector<RegimeSegment> model_segments(const ModelSpec& spec) {
    if (spec.kind == ModelKind::Gbm) return segment_timeline(spec);
    auto r_eff = [&spec](double t) {
        double r = 0.0, q = 0.0;
        effective_rates(spec, t, r, q);
        return r;
    };
    auto q_eff = [&spec](double t) {
        double r = 0.0, q = 0.0;
        effective_rates(spec, t, r, q);
        return q;
    };
    return segment_timeline(spec.valuation_time, spec.maturity, r_eff, q_eff);
}

// ---------------------------------------------------------------------
// CSV emitters.
// ---------------------------------------------------------------------

void write_boundary_csv(const std::string& path, const BoundarySolution& sol,
                        const std::vector<std::string>& extra_footer = {}) {
    CsvWriter w(path, {"u", "state", "x_upper", "x_lower", "residual"});
    for (const BoundaryNode& n : sol.boundary.nodes) {
        w.field(n.u);
        w.field(std::string(state_name(n.state)));
        w.field(n.state == NodeState::Empty ? "nan" : format_double(n.upper));
        w.field(n.state == NodeState::Double ? format_double(n.lower) : "nan");
        w.field(n.residual);
        w.end_row();
    }
    for (const auto& line : extra_footer) {
        w.comment_row({line});
    }
    for (const BoundaryEvent& ev : sol.report.events) {
        w.comment_row({"event", event_kind_name(ev.kind),
                       format_double(ev.time)});
    }
    w.close();
}

void write_price_csv(const std::string& path, const EepBackend& backend,
                     const ExerciseBoundary& boundary, double t,
                     const std::vector<double>& spots) {
    CsvWriter w(path, {"x", "european", "eep", "american", "residual"});
    for (double x : spots) {
        const PricingResult p = price_put(backend, boundary, t, x);
        w.field(x);
        w.field(p.european);
        w.field(p.eep);
        w.field(p.american);
        w.field(p.max_vm_residual);
        w.end_row();
    }
    w.close();
}

// price.csv for a single valuation time, price_t<k>.csv when several.
std::string price_file_name(const std::string& stem, std::size_t index,
                            std::size_t count) {
    if (count <= 1) return stem + ".csv";
    return stem + "_t" + std::to_string(index + 1) + ".csv";
}

// ---------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------

int cmd_regimes(const RunConfig& cfg, const std::filesystem::path& out,
                Manifest& man) {
    const Stopwatch clock;
    const std::vector<RegimeSegment> segs = model_segments(cfg.model);
    const std::string path = (out / "regimes.csv").string();
    CsvWriter w(path, {"t_start", "t_end", "n_boundaries", "band"});
    for (const RegimeSegment& s : segs) {
        w.field(s.t_begin);
        w.field(s.t_end);
        w.field(s.regime.boundaries);
        w.field(std::string(band_name(s.regime.shape)));
        w.end_row();
    }
    w.close();
    man.add_artifact("regimes.csv");
    man.add_seconds("regimes", clock.seconds());
    logf(LogLevel::Info, "regimes: %zu segment(s) -> %s", segs.size(),
         path.c_str());
    return kExitOk;
}

int cmd_boundary(const RunConfig& cfg, const std::filesystem::path& out,
                 Manifest& man) {
    const Engine engine = make_engine(cfg.model);
    const Stopwatch clock;
    const BoundarySolution sol = solve_boundary(*engine.backend, cfg.solver);
    man.add_seconds("solve", clock.seconds());
    write_boundary_csv((out / "boundary.csv").string(), sol);
    man.add_artifact("boundary.csv");
    man.add("max_residual", format_double(sol.report.max_residual));
    man.add("unconverged_nodes",
            std::to_string(sol.report.unconverged_nodes));
    man.add("transition_nodes",
            std::to_string(sol.report.transition_nodes));
    logf(LogLevel::Info,
         "boundary: %zu nodes, max residual %.3e, %d unconverged "
         "(%d at topology transitions)",
         sol.boundary.nodes.size(), sol.report.max_residual,
         sol.report.unconverged_nodes, sol.report.transition_nodes);
    return sol.report.genuine_failures() > 0 ? kExitNoConverge : kExitOk;
}

int cmd_price(const RunConfig& cfg, const std::filesystem::path& out,
              Manifest& man) {
    const Engine engine = make_engine(cfg.model);
    Stopwatch clock;
    const BoundarySolution sol = solve_boundary(*engine.backend, cfg.solver);
    man.add_seconds("solve", clock.seconds());
    clock = Stopwatch();
    for (std::size_t k = 0; k < cfg.price.times.size(); ++k) {
        const std::string file =
            price_file_name("price", k, cfg.price.times.size());
        write_price_csv((out / file).string(), *engine.backend, sol.boundary,
                        cfg.price.times[k], cfg.price.spots);
        man.add_artifact(file);
        if (cfg.price.times.size() > 1) {
            man.add(file + ".time", format_double(cfg.price.times[k]));
        }
    }
    man.add_seconds("price", clock.seconds());
    logf(LogLevel::Info, "price: %zu time(s) x %zu spot(s)",
         cfg.price.times.size(), cfg.price.spots.size());
    return sol.report.genuine_failures() > 0 ? kExitNoConverge : kExitOk;
}

int cmd_hedge(const RunConfig& cfg, const std::filesystem::path& out,
              Manifest& man) {
    if (cfg.model.kind != ModelKind::Ou) {
        logf(LogLevel::Error,
             "hedge: the static-hedge decomposition is defined for the "
             "mean-reverting model only (model.kind = ou)");
        return kExitConfig;
    }
    const Engine engine = make_engine(cfg.model);
    Stopwatch clock;
    const BoundarySolution sol = solve_boundary(*engine.backend, cfg.solver);
    man.add_seconds("solve", clock.seconds());
    clock = Stopwatch();
    const HedgeDecomposition hedge =
        static_hedge_eep(*engine.ou, sol.boundary, cfg.hedge.time,
                         cfg.hedge.spot, cfg.hedge.n_slices);
    man.add_seconds("hedge", clock.seconds());

    const std::string path = (out / "hedge.csv").string();
    CsvWriter w(path, {"u", "X*", "P_CON", "P_AON", "slice_contribution"});
    for (const HedgeSlice& s : hedge.slices) {
        w.field(s.u);
        w.field(s.x_upper);
        w.field(s.p_con);
        w.field(s.p_aon);
        w.field(s.contribution);
        w.end_row();
    }
    w.comment_row({"premium", format_double(hedge.premium())});
    w.close();
    man.add_artifact("hedge.csv");
    man.add("hedge_premium", format_double(hedge.premium()));
    logf(LogLevel::Info, "hedge: %zu slices, premium %.6f",
         hedge.slices.size(), hedge.premium());
    return sol.report.genuine_failures() > 0 ? kExitNoConverge : kExitOk;
}

// Scaled copy of the oracle options used for the Richardson ladder.
FdOptions fd_scaled(const FdOptions& base, int divisor) {
    FdOptions o = base;
    o.n_space = std::max(64, base.n_space / divisor);
    o.n_time = std::max(64, base.n_time / divisor);
    return o;
}

FdSolution fd_american(const ModelSpec& spec, const FdOptions& opt) {
    return spec.kind == ModelKind::Ou ? fd_put_ou(spec, true, opt)
                                      : fd_put_gbm(spec, true, opt);
}

int cmd_verify(const RunConfig& cfg, const std::filesystem::path& out,
               Manifest& man) {
    const Engine engine = make_engine(cfg.model);
    Stopwatch clock;
    const BoundarySolution sol = solve_boundary(*engine.backend, cfg.solver);
    man.add_seconds("solve", clock.seconds());

    clock = Stopwatch();
    const FdSolution fd_coarse =
        fd_american(cfg.model, fd_scaled(cfg.verify.fd, 4));
    const FdSolution fd_medium =
        fd_american(cfg.model, fd_scaled(cfg.verify.fd, 2));
    const FdSolution fd_fine =
        fd_american(cfg.model, fd_scaled(cfg.verify.fd, 1));
    man.add_seconds("oracle", clock.seconds());

    const double K = cfg.model.strike;
    const double t0 = cfg.model.valuation_time;
    const double T = cfg.model.maturity;
    bool all_pass = true;

    const std::string path = (out / "verify.csv").string();
    CsvWriter w(path,
                {"check", "detail", "value", "reference", "tolerance", "pass"});
    auto emit = [&](const std::string& check, const std::string& detail,
                    double value, double reference, double tol) {
        const bool ok = std::abs(value - reference) <= tol;
        all_pass = all_pass && ok;
        w.field(check);
        w.field(detail);
        w.field(value);
        w.field(reference);
        w.field(tol);
        w.field(ok ? 1 : 0);
        w.end_row();
        if (!ok) {
            logf(LogLevel::Warn, "verify: %s (%s) %.10g vs %.10g (tol %.3g)",
                 check.c_str(), detail.c_str(), value, reference, tol);
        }
    };

    // Price agreement at the valuation time, solver vs the Richardson
    // extrapolation of the three oracle resolutions.
    for (double x : cfg.verify.spots) {
        const PricingResult p =
            price_put(*engine.backend, sol.boundary, t0, x);
        const double fine = fd_fine.value_at(x);
        const double medium = fd_medium.value_at(x);
        const double oracle = fine + (fine - medium) / 3.0;
        const double tol = std::max(cfg.verify.rel_tol * std::abs(oracle),
                                    cfg.verify.abs_tol_rel * K);
        emit("price", "x=" + format_double(x), p.american, oracle, tol);
    }
    // Convergence-order diagnostic for the manifest, measured at the spot
    // nearest the strike (deep in- or out-of-the-money spots pin to the
    // payoff at every resolution, leaving only noise in the differences).
    {
        double x = cfg.verify.spots.front();
        for (double s : cfg.verify.spots) {
            if (std::abs(s - K) < std::abs(x - K)) x = s;
        }
        const double c = fd_coarse.value_at(x);
        const double m = fd_medium.value_at(x);
        const double f = fd_fine.value_at(x);
        const double ratio = (c - m) / (m - f);
        man.add("richardson_ratio", format_double(ratio));
    }

    // Boundary containment against the fine contact set.  Cell-level
    // agreement is checked only where both methods can localise the
    // boundary: the comparison skips the skirt below maturity (payoff
    // kink) and levels inside a solver node interval whose endpoints
    // change state (a section's birth or death is resolved only to the
    // node spacing).  The oracle localises its contact to one grid cell
    // per time level, and the contact may legitimately sweep several
    // cells within one time step, so each solver level is measured
    // against the span of the contact at the level and its immediate
    // neighbours rather than the single-level value.
    const double h = fd_fine.cell_width();
    const double cells_allowed = static_cast<double>(cfg.verify.boundary_cells);
    auto cells_apart = [&](double solver_level, double oracle_level) {
        if (fd_fine.log_space) {
            return std::abs(std::log(solver_level) - std::log(oracle_level)) /
                   h;
        }
        return std::abs(solver_level - oracle_level) / h;
    };
    const double floor_spot = fd_fine.log_space
                                  ? std::exp(fd_fine.grid.front() + 2.0 * h)
                                  : fd_fine.grid.front() + 2.0 * h;
    std::vector<std::pair<double, double>> change_spans;
    for (std::size_t k = 0; k + 1 < sol.boundary.nodes.size(); ++k) {
        if (sol.boundary.nodes[k].state != sol.boundary.nodes[k + 1].state) {
            change_spans.emplace_back(sol.boundary.nodes[k].u,
                                      sol.boundary.nodes[k + 1].u);
        }
    }
    auto near_state_change = [&](double u) {
        for (const auto& s : change_spans) {
            if (u >= s.first && u <= s.second) return true;
        }
        return false;
    };
    double max_up_cells = 0.0, max_lo_cells = 0.0;
    int compared_up = 0, compared_lo = 0, presence_mismatch = 0, usable = 0;
    for (std::size_t i = 0; i < fd_fine.times.size(); ++i) {
        const double u = fd_fine.times[i];
        if (u < t0 || u > T - cfg.verify.boundary_skirt) continue;
        if (near_state_change(u)) continue;
        ++usable;
        const BoundaryNode n = interpolate_boundary(sol.boundary, u);
        const bool solver_live = n.state != NodeState::Empty && n.upper > 0.0;
        const bool oracle_live = !std::isnan(fd_fine.contact_upper[i]);
        if (solver_live != oracle_live) {
            ++presence_mismatch;
            continue;
        }
        if (!solver_live) continue;
        auto cells_to_bracket = [&](double solver_level,
                                    const std::vector<double>& contact) {
            double lo = contact[i], hi = contact[i];
            if (i > 0 && !std::isnan(contact[i - 1])) {
                lo = std::min(lo, contact[i - 1]);
                hi = std::max(hi, contact[i - 1]);
            }
            if (i + 1 < contact.size() && !std::isnan(contact[i + 1])) {
                lo = std::min(lo, contact[i + 1]);
                hi = std::max(hi, contact[i + 1]);
            }
            if (solver_level >= lo && solver_level <= hi) return 0.0;
            return std::min(cells_apart(solver_level, lo),
                            cells_apart(solver_level, hi));
        };
        max_up_cells = std::max(
            max_up_cells, cells_to_bracket(n.upper, fd_fine.contact_upper));
        ++compared_up;
        // The lower edge is only meaningful when the solver reports a band
        // and the oracle's lowest contact sits clear of the grid floor.
        if (n.state == NodeState::Double && n.lower > floor_spot &&
            fd_fine.contact_lower[i] > floor_spot) {
            max_lo_cells = std::max(
                max_lo_cells, cells_to_bracket(n.lower, fd_fine.contact_lower));
            ++compared_lo;
        }
    }
    if (compared_up > 0) {
        emit("boundary_upper",
             "max cells over " + std::to_string(compared_up) + " levels",
             max_up_cells, 0.0, cells_allowed);
    }
    if (compared_lo > 0) {
        emit("boundary_lower",
             "max cells over " + std::to_string(compared_lo) + " levels",
             max_lo_cells, 0.0, cells_allowed);
    }
    if (usable > 0) {
        emit("boundary_presence", "mismatched level fraction",
             static_cast<double>(presence_mismatch) /
                 static_cast<double>(usable),
             0.0, 0.02);
    }
    w.close();
    man.add_artifact("verify.csv");
    man.add("verify_pass", all_pass ? "1" : "0");
    logf(LogLevel::Info, "verify: %s -> %s", all_pass ? "PASS" : "FAIL",
         path.c_str());

    if (sol.report.genuine_failures() > 0) return kExitNoConverge;
    return all_pass ? kExitOk : kExitVerifyFail;
}

int cmd_sweep(const RunConfig& cfg, const std::filesystem::path& out,
              int workers, Manifest& man) {
    const std::vector<double>& sigmas = cfg.sweep.sigmas;
    if (sigmas.empty()) {
        logf(LogLevel::Error,
             "sweep: config must provide sweep { sigmas = ... }");
        return kExitConfig;
    }

    struct Entry {
        BoundarySolution sol;
        // prices[time index][spot index]
        std::vector<std::vector<PricingResult>> prices;
        double seconds = 0.0;
        std::exception_ptr error;
    };
    std::vector<Entry> entries(sigmas.size());

    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= sigmas.size()) return;
            Entry& e = entries[i];
            try {
                const Stopwatch clock;
                ModelSpec spec = cfg.model;
                spec.sigma = ParamCurve::constant(sigmas[i]);
                spec.validate();
                const Engine engine = make_engine(spec);
                e.sol = solve_boundary(*engine.backend, cfg.solver);
                e.prices.resize(cfg.price.times.size());
                for (std::size_t k = 0; k < cfg.price.times.size(); ++k) {
                    e.prices[k].reserve(cfg.price.spots.size());
                    for (double x : cfg.price.spots) {
                        e.prices[k].push_back(price_put(
                            *engine.backend, e.sol.boundary,
                            cfg.price.times[k], x));
                    }
                }
                e.seconds = clock.seconds();
            } catch (...) {
                e.error = std::current_exception();
            }
        }
    };

    const int n_threads = std::max(
        1, std::min(workers, static_cast<int>(sigmas.size())));
    {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    // Artifacts are written sequentially in list order, so the output set
    // is identical no matter how the solves were scheduled.
    int exit_code = kExitOk;
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        Entry& e = entries[i];
        if (e.error) {
            try {
                std::rethrow_exception(e.error);
            } catch (const std::exception& ex) {
                logf(LogLevel::Error, "sweep: sigma=%g failed: %s", sigmas[i],
                     ex.what());
            }
            return kExitFailure;
        }
        char tag[32];
        std::snprintf(tag, sizeof(tag), "%02zu", i + 1);
        const std::string bfile = std::string("boundary_sweep_") + tag +
                                  ".csv";
        write_boundary_csv((out / bfile).string(), e.sol,
                           {"sigma," + format_double(sigmas[i])});
        man.add_artifact(bfile);
        for (std::size_t k = 0; k < cfg.price.times.size(); ++k) {
            const std::string pfile = price_file_name(
                std::string("price_sweep_") + tag, k, cfg.price.times.size());
            CsvWriter w((out / pfile).string(),
                        {"x", "european", "eep", "american", "residual"});
            for (std::size_t j = 0; j < cfg.price.spots.size(); ++j) {
                const PricingResult& p = e.prices[k][j];
                w.field(cfg.price.spots[j]);
                w.field(p.european);
                w.field(p.eep);
                w.field(p.american);
                w.field(p.max_vm_residual);
                w.end_row();
            }
            w.comment_row({"sigma", format_double(sigmas[i])});
            w.close();
            man.add_artifact(pfile);
        }
        man.add(std::string("sigma_") + tag, format_double(sigmas[i]));
        man.add_seconds(std::string("entry_") + tag, e.seconds);
        if (e.sol.report.genuine_failures() > 0) exit_code = kExitNoConverge;
        logf(LogLevel::Info,
             "sweep: sigma=%g max residual %.3e, %d unconverged "
             "(%d at topology transitions), %.2fs",
             sigmas[i], e.sol.report.max_residual,
             e.sol.report.unconverged_nodes, e.sol.report.transition_nodes,
             e.seconds);
    }
    return exit_code;
}

}  // namespace

LogLevel parse_log_level(const std::string& text) {
    if (text == "error") return LogLevel::Error;
    if (text == "warn") return LogLevel::Warn;
    if (text == "info") return LogLevel::Info;
    if (text == "debug") return LogLevel::Debug;
    throw ConfigError("log level must be one of error|warn|info|debug, got '" +
                      text + "'");
}

int run_subcommand(const std::string& name, const RunOptions& opt) {
    g_level = opt.log_level;
    try {
        RunConfig cfg = load_config(opt.config_path);
        if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
        const std::filesystem::path out(cfg.out_dir);
        std::filesystem::create_directories(out);

        const int workers =
            opt.workers > 0
                ? opt.workers
                : std::max(1u, std::thread::hardware_concurrency());

        Manifest man(name, cfg, workers);
        const Stopwatch total;
        int code = kExitConfig;
        if (name == "regimes") {
            code = cmd_regimes(cfg, out, man);
        } else if (name == "boundary") {
            code = cmd_boundary(cfg, out, man);
        } else if (name == "price") {
            code = cmd_price(cfg, out, man);
        } else if (name == "hedge") {
            code = cmd_hedge(cfg, out, man);
        } else if (name == "verify") {
            code = cmd_verify(cfg, out, man);
        } else if (name == "sweep") {
            code = cmd_sweep(cfg, out, workers, man);
        } else {
            logf(LogLevel::Error, "unknown subcommand '%s'", name.c_str());
            return kExitConfig;
        }
        man.add_seconds("total", total.seconds());
        man.add("exit_code", std::to_string(code));
        man.write(out);
        return code;
    } catch (const ConfigError& e) {
        logf(LogLevel::Error, "%s", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        logf(LogLevel::Error, "internal error: %s", e.what());
        return kExitFailure;
    }
}

}  // namespace exbound
