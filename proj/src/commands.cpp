#include "apsde/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <json.hpp>

namespace apsde
{

namespace
{
using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::ofstream open_artifact(std::string const& dir, std::string const& name)
{
    fs::create_directories(dir);
    auto const path = fs::path(dir) / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

void write_text(std::string const& dir, std::string const& name, std::string const& text)
{
    auto os = open_artifact(dir, name);
    os << text;
    if (text.empty() || text.back() != '\n') os << '\n';
}

std::shared_ptr<NoiseSampler const> make_sampler(RunConfig const& c, Problem const& p,
                                                 std::uint64_t seed)
{
    return std::make_shared<NoiseSampler const>(
        p.noise, Window{c.numerics.window_lo.value(), c.numerics.window_hi.value()},
        c.numerics.h.value(), seed);
}

void check_window_has_zero(RunConfig const& c)
{
    if (!(c.numerics.window_lo.value() <= 0 && 0 <= c.numerics.window_hi.value()))
        throw ConfigError("numerics.window: must contain t = 0 (the two-sided noise is "
                          "glued there)");
}

Json window_json(Window w)
{
    return Json::array({w.lo, w.hi});
}

void write_picard_artifacts(PicardRun const& run, RunConfig const& c, std::string const& dir,
                            bool timings)
{
    auto const& r = run.result;
    auto const valid = r.s_report.valid_window;
    {
        auto os = open_artifact(dir, "ensemble.csv");
        write_ensemble_csv(os, r.ensemble, c.output.stride, c.output.max_paths, valid);
    }
    {
        auto os = open_artifact(dir, "mean_curve.csv");
        write_mean_curve_csv(os, r.ensemble, c.output.stride, run.problem.reference_mean, valid);
    }
    {
        auto os = open_artifact(dir, "gap_trace.jsonl");
        write_gap_trace_jsonl(os, r.trace, timings);
    }
    write_text(dir, "conditions.json", to_json(run.conditions));
    write_text(dir, "config.json", to_json(c));

    Json s;
    s["problem"] = run.problem.name;
    s["converged"] = r.converged;
    s["iterations"] = r.trace.size();
    s["final_gap"] = r.trace.empty() ? 0.0 : r.trace.back().gap;
    s["paths"] = r.ensemble.paths();
    s["h"] = r.ensemble.grid().step();
    s["truncation"] = r.truncation;
    s["tail_factor"] = r.s_report.tail_factor;
    s["valid_window"] = window_json(valid);
    s["compensator"] = r.s_report.compensator_method;
    s["constants"] = Json{{"K", r.constants.k},
                          {"omega", r.constants.omega},
                          {"declared", r.constants.declared}};
    s["warnings"] = r.warnings;
    write_text(dir, "summary.json", s.dump(2));
}

char const* verdict_name(Verdict v)
{
    switch (v)
    {
    case Verdict::existence: return "existence";
    case Verdict::distribution: return "distribution";
    case Verdict::joint: return "joint";
    }
    return "joint";
}

bool verdict_of(ConditionReport const& r, Verdict v)
{
    switch (v)
    {
    case Verdict::existence: return r.existence;
    case Verdict::distribution: return r.distribution;
    case Verdict::joint: return r.joint();
    }
    return r.joint();
}

std::string yes_no(bool b)
{
    return b ? "true" : "false";
}
}  // namespace

ConditionReport problem_conditions(Problem const& problem)
{
    auto const& sys = problem.system;
    Real k, omega;
    if (sys.k() && sys.omega())
    {
        k = *sys.k();
        omega = *sys.omega();
    }
    else
    {
        auto const c = resolve_constants(sys);
        k = sys.k() ? *sys.k() : Real(c.k);
        omega = sys.omega() ? *sys.omega() : Real(c.omega);
    }
    auto const diag = validate_spec(problem.noise);
    return check_conditions(k, omega, problem.coefficients->lipschitz(), diag.b);
}

PicardRun run_picard(RunConfig const& c, std::uint64_t seed, std::ostream* log)
{
    check_window_has_zero(c);
    auto problem = build_problem(c);
    double const t_c = validate_numerics(c, problem);
    auto conditions = problem_conditions(problem);

    PicardOptions opt;
    opt.tol = c.numerics.tol;
    opt.max_iter = c.numerics.max_iter;
    opt.truncation = t_c;
    opt.paths = c.numerics.paths;
    if (log)
    {
        opt.on_iteration = [log](PicardRecord const& rec) {
            *log << "  sweep " << rec.k << ": gap " << format_double(rec.gap)
                 << ", sup E|Y|^2 " << format_double(rec.sup_second_moment) << '\n';
        };
    }
    auto result = picard_solve(problem.system, *problem.coefficients,
                               make_sampler(c, problem, seed), opt);
    if (log)
        for (auto const& w : result.warnings) *log << "warning: " << w << '\n';
    return PicardRun{std::move(problem), std::move(result), conditions};
}

ScanRun run_apscan(RunConfig const& c, std::ostream* log)
{
    double const h = c.numerics.h.value();
    if (c.analysis.times.empty()) throw ConfigError("analysis.times: the scan needs times");
    if (c.analysis.shifts.empty()) throw ConfigError("analysis.shifts: the scan needs shifts");

    if (log) *log << "primary ensemble (seed " << c.seed << ")\n";
    ScanRun run{run_picard(c, c.seed, log), {}, -1, 0, 0, {}};
    auto const& ens = run.primary.result.ensemble;

    for (auto i : expand_points(c.analysis.times, h)) run.t_grid.push_back(static_cast<double>(i) * h);
    ShiftSequence seq;
    for (auto i : expand_points(c.analysis.shifts, h)) seq.shifts.push_back(static_cast<double>(i) * h);
    seq.t_grid = run.t_grid;

    run.max_points = c.analysis.max_points > 0 ? c.analysis.max_points
                                               : (ens.dim() == 1 ? 2000 : 300);
    run.max_points = std::min(run.max_points, ens.paths());

    if (c.analysis.epsilon)
    {
        seq.epsilon = c.analysis.epsilon->value();
    }
    else
    {
        run.floor_seed = c.analysis.floor_seed.value_or(c.seed + 1);
        if (run.floor_seed == c.seed)
            throw ConfigError("analysis.floor_seed: must differ from seed");
        if (log) *log << "floor ensemble (seed " << run.floor_seed << ")\n";
        auto const second = run_picard(c, run.floor_seed, log);
        auto const la = law_trajectory(ens, run.t_grid, run.max_points);
        auto const lb = law_trajectory(second.result.ensemble, run.t_grid, run.max_points);
        run.floor = law_distance_floor(la, lb, run.t_grid);
        seq.epsilon = c.analysis.epsilon_factor.value() * run.floor;
        if (log)
            *log << "Monte Carlo floor " << format_double(run.floor) << ", epsilon "
                 << format_double(seq.epsilon) << '\n';
    }
    run.report = ap_distribution_scan(ens, seq, BlOptions{}, run.max_points);
    return run;
}

std::string scan_json(ScanRun const& run, RunConfig const& c)
{
    auto const base = Json::parse(to_json(run.report));
    Json j;
    j["epsilon"] = base["epsilon"];
    if (run.floor >= 0)
        j["epsilon_policy"] = Json{{"kind", "floor_multiple"},
                                   {"factor", c.analysis.epsilon_factor.value()},
                                   {"floor", run.floor},
                                   {"floor_seed", run.floor_seed}};
    else
        j["epsilon_policy"] = Json{{"kind", "fixed"}};
    j["max_points"] = run.max_points;
    j["t_grid"] = run.t_grid;
    j["shifts"] = base["shifts"];
    j["accepted"] = run.report.accepted();
    j["max_gap"] = base["max_gap"];
    return j.dump(2);
}

int cmd_check(RunConfig const& c, CommandOptions const& o, std::ostream& out)
{
    auto const problem = build_problem(c);
    auto const r = problem_conditions(problem);
    out << "problem " << problem.name << (r.exact ? " (exact arithmetic)" : " (floating point)")
        << '\n'
        << "  K = " << r.k.str() << ", omega = " << r.omega.str() << ", L = " << r.l.str()
        << ", b = " << r.b.str() << '\n'
        << "  (1 + 2b)/omega^2 + 2/omega = " << r.lhs.str() << ", eta = " << r.eta.str() << '\n'
        << "  existence:    lhs < 1/(16 K^2 L) = " << r.threshold_existence.str() << ": "
        << yes_no(r.existence) << "  (b < " << r.b_bound_existence.str() << ")\n"
        << "  distribution: lhs < 1/(32 K^2 L) = " << r.threshold_distribution.str() << ": "
        << yes_no(r.distribution) << "  (b < " << r.b_bound_distribution.str() << ")\n"
        << "  joint: " << yes_no(r.joint()) << '\n';
    bool const ok = verdict_of(r, o.gate);
    out << "verdict (" << verdict_name(o.gate) << "): " << yes_no(ok) << '\n';
    if (!o.out.empty()) write_text(o.out, "conditions.json", to_json(r));
    return ok ? 0 : 1;
}

int cmd_simulate(RunConfig const& c, CommandOptions const& o, std::ostream& out)
{
    check_window_has_zero(c);
    auto const problem = build_problem(c);
    validate_numerics(c, problem);
    Vector y0 = Vector::Zero(problem.system.dim());
    for (std::size_t i = 0; i < c.numerics.y0.size(); ++i) y0[static_cast<Index>(i)] = c.numerics.y0[i];
    auto const ens = simulate_mild(problem.system, *problem.coefficients,
                                   make_sampler(c, problem, c.seed), y0, c.numerics.paths);
    out << "simulated " << ens.paths() << " paths of " << problem.name << " on ["
        << format_double(ens.grid().t_lo()) << ", " << format_double(ens.grid().t_hi()) << "]\n";
    if (!o.out.empty())
    {
        {
            auto os = open_artifact(o.out, "ensemble.csv");
            write_ensemble_csv(os, ens, c.output.stride, c.output.max_paths);
        }
        {
            auto os = open_artifact(o.out, "mean_curve.csv");
            write_mean_curve_csv(os, ens, c.output.stride, problem.reference_mean);
        }
        write_text(o.out, "config.json", to_json(c));
    }
    return 0;
}

int cmd_picard(RunConfig const& c, CommandOptions const& o, std::ostream& out)
{
    auto const run = run_picard(c, c.seed, &out);
    auto const& r = run.result;
    out << (r.converged ? "converged" : "not converged") << " after " << r.trace.size()
        << " sweeps (eta = " << run.conditions.eta.str() << ", T_c = "
        << format_double(r.truncation) << ")\n";
    if (!o.out.empty()) write_picard_artifacts(run, c, o.out, o.timings);
    return r.converged ? 0 : 1;
}

int cmd_apscan(RunConfig const& c, CommandOptions const& o, std::ostream& out)
{
    auto const run = run_apscan(c, &out);
    auto const accepted = run.report.accepted();
    out << accepted.size() << " of " << run.report.shifts.size()
        << " shifts accepted at epsilon " << format_double(run.report.epsilon)
        << "; max gap "
        << (std::isfinite(run.report.max_gap) ? format_double(run.report.max_gap) : "inf")
        << '\n';
    if (!o.out.empty())
    {
        write_picard_artifacts(run.primary, c, o.out, o.timings);
        write_text(o.out, "scan.json", scan_json(run, c));
    }
    return accepted.empty() ? 1 : 0;
}

int cmd_galerkin(RunConfig const& config, CommandOptions const& o, std::ostream& out)
{
    RunConfig c = config;
    if (!c.preset) c.preset = "galerkin_heat";
    if (*c.preset != "galerkin_heat")
        throw ConfigError("preset: the galerkin command runs galerkin_heat, not '" + *c.preset
                          + "'");
    return cmd_picard(c, o, out);
}

}  // namespace apsde
