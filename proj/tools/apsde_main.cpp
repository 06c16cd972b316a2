// apsde: bounded solutions of semilinear SDEs with exponential dichotomy.
//
//   apsde check    --config run.json
//   apsde picard   --config run.json --out results/ --paths 2000
//   apsde apscan   --config run.json --out results/
//
// Exit codes: 0 success / verdict true, 1 verdict false or not converged,
// 2 invalid input.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "apsde/commands.hpp"
#include "apsde/parallel.hpp"

namespace
{
struct Flags
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<long long> paths;
    std::string out;
    std::optional<std::string> dt;
    std::optional<std::string> truncation;
    std::optional<double> tol;
    std::optional<int> max_iter;
    std::optional<unsigned> threads;
    bool timings = false;
    std::string require = "joint";
};

void add_flags(CLI::App* cmd, Flags& f, bool with_out)
{
    cmd->add_option("--config", f.config, "Run configuration (JSON)")->required();
    cmd->add_option("--seed", f.seed, "Master seed of the noise");
    cmd->add_option("--paths", f.paths, "Monte Carlo paths M");
    if (with_out) cmd->add_option("--out", f.out, "Artifact directory")->default_val("out");
    cmd->add_option("--dt", f.dt, "Step h (number or \"p/q\")");
    cmd->add_option("--truncation", f.truncation, "Convolution truncation T_c");
    cmd->add_option("--tol", f.tol, "Picard tolerance on the gap");
    cmd->add_option("--max-iter", f.max_iter, "Picard sweep limit");
    cmd->add_option("--threads", f.threads, "Worker threads (results do not depend on it)");
    if (with_out)
        cmd->add_flag("--timings", f.timings, "Record wall_ms in gap_trace.jsonl");
}

apsde::Real parse_real_flag(std::string const& name, std::string const& text)
{
    try
    {
        return apsde::Real::parse(text);
    }
    catch (std::exception const& e)
    {
        throw apsde::ConfigError(name + ": " + e.what());
    }
}

apsde::RunConfig load(Flags const& f)
{
    auto c = apsde::load_config(f.config);
    if (f.seed) c.seed = *f.seed;
    if (f.paths) c.numerics.paths = static_cast<apsde::Index>(*f.paths);
    if (f.dt) c.numerics.h = parse_real_flag("--dt", *f.dt);
    if (f.truncation) c.numerics.truncation = parse_real_flag("--truncation", *f.truncation);
    if (f.tol) c.numerics.tol = *f.tol;
    if (f.max_iter) c.numerics.max_iter = *f.max_iter;
    return c;
}
}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"apsde: bounded and almost periodic solutions of Levy-driven SDEs"};
    app.require_subcommand(1);

    Flags f;
    auto* check = app.add_subcommand("check", "Evaluate the contraction conditions");
    add_flags(check, f, false);
    check->add_option("--out", f.out, "Also write conditions.json here");
    check->add_option("--require", f.require, "Verdict gating the exit code")
        ->check(CLI::IsMember({"existence", "distribution", "joint"}));
    auto* simulate = app.add_subcommand("simulate", "Forward mild solution from y0");
    add_flags(simulate, f, true);
    auto* picard = app.add_subcommand("picard", "Picard iteration of S to the bounded solution");
    add_flags(picard, f, true);
    auto* apscan = app.add_subcommand("apscan", "Almost-periodicity-in-distribution scan");
    add_flags(apscan, f, true);
    auto* galerkin = app.add_subcommand("galerkin", "Picard pipeline on the Galerkin heat model");
    add_flags(galerkin, f, true);

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& e)
    {
        int const code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try
    {
        if (f.threads) apsde::set_thread_count(*f.threads);
        auto const config = load(f);
        apsde::CommandOptions opt;
        opt.out = f.out;
        opt.timings = f.timings;
        opt.gate = f.require == "existence"      ? apsde::Verdict::existence
                   : f.require == "distribution" ? apsde::Verdict::distribution
                                                 : apsde::Verdict::joint;
        if (check->parsed()) return apsde::cmd_check(config, opt, std::cout);
        if (simulate->parsed()) return apsde::cmd_simulate(config, opt, std::cout);
        if (picard->parsed()) return apsde::cmd_picard(config, opt, std::cout);
        if (apscan->parsed()) return apsde::cmd_apscan(config, opt, std::cout);
        if (galerkin->parsed()) return apsde::cmd_galerkin(config, opt, std::cout);
    }
    catch (std::invalid_argument const& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    catch (std::exception const& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
