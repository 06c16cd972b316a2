#include "apsde/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "apsde/expression.hpp"
#include "apsde/solver.hpp"

namespace apsde
{

namespace
{
using Json = nlohmann::ordered_json;

[[noreturn]] void fail(std::string const& where, std::string const& what)
{
    throw ConfigError(where + ": " + what);
}

//! Rejects keys outside the allowed set (catches typos early).
void check_keys(Json const& j, std::string const& where,
                std::initializer_list<char const*> allowed)
{
    if (!j.is_object()) fail(where, "expected an object");
    for (auto const& item : j.items())
    {
        bool ok = false;
        for (char const* a : allowed) ok = ok || item.key() == a;
        if (!ok)
        {
            std::string list;
            for (char const* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
            fail(where, "unknown key '" + item.key() + "' (allowed: " + list + ")");
        }
    }
}

Real read_real(Json const& j, std::string const& where)
{
    if (j.is_number_integer())
    {
        return j.is_number_unsigned()
                   ? Real(Rational(static_cast<std::int64_t>(j.get<std::uint64_t>())))
                   : Real(Rational(j.get<std::int64_t>()));
    }
    if (j.is_number_float())
    {
        double const v = j.get<double>();
        if (!std::isfinite(v)) fail(where, "not finite");
        return Real(v);
    }
    if (j.is_string())
    {
        auto const text = j.get<std::string>();
        try
        {
            return Real::parse(text);
        }
        catch (std::exception const&)
        {
        }
        try
        {
            auto const e = Expr::parse(text);
            if (!e.is_constant()) fail(where, "'" + text + "' is not a constant");
            double const v = e.eval(0.0);
            if (!std::isfinite(v)) fail(where, "'" + text + "' is not finite");
            return Real(v);
        }
        catch (ExpressionError const& err)
        {
            fail(where, err.what());
        }
    }
    fail(where, "expected a number or a numeric string");
}

double read_double(Json const& j, std::string const& where)
{
    return read_real(j, where).value();
}

Json write_real(Real const& r)
{
    if (r.exact()) return r.exact()->str();
    return r.value();
}

std::int64_t read_int(Json const& j, std::string const& where)
{
    if (!j.is_number_integer()) fail(where, "expected an integer");
    if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
        fail(where, "integer too large");
    return j.get<std::int64_t>();
}

std::vector<double> read_vector(Json const& j, std::string const& where)
{
    if (!j.is_array()) fail(where, "expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(read_double(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

Vector to_eigen(std::vector<double> const& v)
{
    Vector out(static_cast<Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Index>(i)] = v[i];
    return out;
}

Json write_vector(Vector const& v)
{
    Json out = Json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Matrix read_matrix(Json const& j, std::string const& where)
{
    if (!j.is_array() || j.empty()) fail(where, "expected a nonempty array of rows");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < j.size(); ++i)
    {
        rows.push_back(read_vector(j[i], where + "[" + std::to_string(i) + "]"));
        if (rows.back().size() != rows.front().size() || rows.back().empty())
            fail(where, "rows must be nonempty and of equal length");
    }
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c)
            m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return m;
}

Json write_matrix(Matrix const& m)
{
    Json out = Json::array();
    for (Index r = 0; r < m.rows(); ++r)
    {
        Json row = Json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(row);
    }
    return out;
}

std::vector<std::string> read_strings(Json const& j, std::string const& where)
{
    if (!j.is_array()) fail(where, "expected an array of expressions");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < j.size(); ++i)
    {
        auto const& e = j[i];
        if (e.is_string())
            out.push_back(e.get<std::string>());
        else if (e.is_number())
            out.push_back(e.dump());
        else
            fail(where + "[" + std::to_string(i) + "]", "expected an expression string");
    }
    return out;
}

//---------------------------------------------------------------------------//

SystemConfig read_system(Json const& j, std::string const& where)
{
    check_keys(j, where, {"A", "P", "K", "omega"});
    if (!j.contains("A") || !j.contains("P")) fail(where, "needs both A and P");
    SystemConfig s;
    s.a = read_matrix(j["A"], where + ".A");
    s.p = read_matrix(j["P"], where + ".P");
    if (j.contains("K")) s.k = read_real(j["K"], where + ".K");
    if (j.contains("omega")) s.omega = read_real(j["omega"], where + ".omega");
    if (s.k && !(s.k->value() > 0)) fail(where + ".K", "must be positive");
    if (s.omega && !(s.omega->value() > 0)) fail(where + ".omega", "must be positive");
    return s;
}

Json write_system(SystemConfig const& s)
{
    Json j;
    j["A"] = write_matrix(s.a);
    j["P"] = write_matrix(s.p);
    if (s.k) j["K"] = write_real(*s.k);
    if (s.omega) j["omega"] = write_real(*s.omega);
    return j;
}

MarkDistribution read_marks(Json const& j, std::string const& where)
{
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        fail(where, "needs a string 'type' (point, annulus or mixture)");
    auto const type = j["type"].get<std::string>();
    if (type == "point")
    {
        check_keys(j, where, {"type", "point"});
        if (!j.contains("point")) fail(where, "needs 'point'");
        return PointMass{to_eigen(read_vector(j["point"], where + ".point"))};
    }
    if (type == "annulus")
    {
        check_keys(j, where, {"type", "r_min", "r_max"});
        if (!j.contains("r_min") || !j.contains("r_max")) fail(where, "needs r_min and r_max");
        return UniformAnnulus{read_double(j["r_min"], where + ".r_min"),
                              read_double(j["r_max"], where + ".r_max")};
    }
    if (type == "mixture")
    {
        check_keys(j, where, {"type", "atoms", "weights"});
        if (!j.contains("atoms") || !j.contains("weights")) fail(where, "needs atoms and weights");
        DiscreteMixture m;
        auto const& atoms = j["atoms"];
        if (!atoms.is_array()) fail(where + ".atoms", "expected an array");
        for (std::size_t i = 0; i < atoms.size(); ++i)
            m.atoms.push_back(to_eigen(read_vector(atoms[i], where + ".atoms[" + std::to_string(i) + "]")));
        m.weights = read_vector(j["weights"], where + ".weights");
        return m;
    }
    fail(where + ".type", "unknown mark type '" + type + "'");
}

Json write_marks(MarkDistribution const& marks)
{
    Json j;
    if (auto const* p = std::get_if<PointMass>(&marks))
    {
        j["type"] = "point";
        j["point"] = write_vector(p->point);
    }
    else if (auto const* a = std::get_if<UniformAnnulus>(&marks))
    {
        j["type"] = "annulus";
        j["r_min"] = a->r_min;
        j["r_max"] = a->r_max;
    }
    else
    {
        auto const& m = std::get<DiscreteMixture>(marks);
        j["type"] = "mixture";
        j["atoms"] = Json::array();
        for (auto const& x : m.atoms) j["atoms"].push_back(write_vector(x));
        j["weights"] = m.weights;
    }
    return j;
}

LevyProcessSpec read_levy(Json const& j, std::string const& where)
{
    check_keys(j, where, {"drift", "Q", "jumps"});
    if (!j.contains("Q")) fail(where, "needs the covariance Q");
    LevyProcessSpec s;
    s.wiener.covariance = read_matrix(j["Q"], where + ".Q");
    s.drift = j.contains("drift") ? to_eigen(read_vector(j["drift"], where + ".drift"))
                                  : Vector::Zero(s.wiener.covariance.rows());
    if (j.contains("jumps"))
    {
        auto const& jumps = j["jumps"];
        if (!jumps.is_array()) fail(where + ".jumps", "expected an array");
        for (std::size_t i = 0; i < jumps.size(); ++i)
        {
            std::string const w = where + ".jumps[" + std::to_string(i) + "]";
            check_keys(jumps[i], w, {"rate", "region", "marks"});
            if (!jumps[i].contains("rate") || !jumps[i].contains("region")
                || !jumps[i].contains("marks"))
                fail(w, "needs rate, region and marks");
            JumpComponent c;
            c.rate = read_real(jumps[i]["rate"], w + ".rate");
            auto const region = jumps[i]["region"];
            if (region == "small")
                c.region = JumpRegion::small;
            else if (region == "large")
                c.region = JumpRegion::large;
            else
                fail(w + ".region", "must be \"small\" or \"large\"");
            c.marks = read_marks(jumps[i]["marks"], w + ".marks");
            s.jumps.push_back(std::move(c));
        }
    }
    return s;
}

Json write_levy(LevyProcessSpec const& s)
{
    Json j;
    j["drift"] = write_vector(s.drift);
    j["Q"] = write_matrix(s.wiener.covariance);
    j["jumps"] = Json::array();
    for (auto const& c : s.jumps)
    {
        Json e;
        e["rate"] = write_real(c.rate);
        e["region"] = to_string(c.region);
        e["marks"] = write_marks(c.marks);
        j["jumps"].push_back(e);
    }
    return j;
}

ExpressionCoefficientSpec read_coefficients(Json const& j, std::string const& where)
{
    check_keys(j, where, {"f", "g", "F", "G", "noise_dim", "L"});
    if (!j.contains("f") || !j.contains("g") || !j.contains("L"))
        fail(where, "needs f, g and L");
    ExpressionCoefficientSpec s;
    s.f = read_strings(j["f"], where + ".f");
    s.g = read_strings(j["g"], where + ".g");
    if (j.contains("F")) s.F = read_strings(j["F"], where + ".F");
    if (j.contains("G")) s.G = read_strings(j["G"], where + ".G");
    if (j.contains("noise_dim")) s.noise_dim = read_int(j["noise_dim"], where + ".noise_dim");
    s.lipschitz = read_real(j["L"], where + ".L");
    return s;
}

Json write_coefficients(ExpressionCoefficientSpec const& s)
{
    Json j;
    j["f"] = s.f;
    j["g"] = s.g;
    if (!s.F.empty()) j["F"] = s.F;
    if (!s.G.empty()) j["G"] = s.G;
    j["noise_dim"] = s.noise_dim;
    j["L"] = write_real(s.lipschitz);
    return j;
}

std::vector<Real> read_reals(Json const& j, std::string const& where)
{
    if (!j.is_array()) fail(where, "expected an array");
    std::vector<Real> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(read_real(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

Json write_reals(std::vector<Real> const& v)
{
    Json out = Json::array();
    for (auto const& r : v) out.push_back(write_real(r));
    return out;
}

PointSet read_points(Json const& j, std::string const& where)
{
    PointSet s;
    if (j.is_array())
    {
        s.values = read_reals(j, where);
        return s;
    }
    check_keys(j, where, {"values", "range", "around"});
    if (j.contains("values")) s.values = read_reals(j["values"], where + ".values");
    if (j.contains("range"))
    {
        auto const& r = j["range"];
        std::string const w = where + ".range";
        check_keys(r, w, {"from", "to", "step"});
        if (!r.contains("from") || !r.contains("to") || !r.contains("step"))
            fail(w, "needs from, to and step");
        s.range = RangeSpec{read_real(r["from"], w + ".from"), read_real(r["to"], w + ".to"),
                            read_real(r["step"], w + ".step")};
        if (!(s.range->step.value() > 0)) fail(w + ".step", "must be positive");
    }
    if (j.contains("around"))
    {
        auto const& a = j["around"];
        std::string const w = where + ".around";
        check_keys(a, w, {"centers", "radius_steps"});
        if (!a.contains("centers")) fail(w, "needs centers");
        AroundSpec around;
        around.centers = read_reals(a["centers"], w + ".centers");
        if (a.contains("radius_steps")) around.radius_steps = read_int(a["radius_steps"], w + ".radius_steps");
        if (around.radius_steps < 0) fail(w + ".radius_steps", "must be nonnegative");
        s.around = std::move(around);
    }
    return s;
}

Json write_points(PointSet const& s)
{
    Json j = Json::object();
    if (!s.values.empty()) j["values"] = write_reals(s.values);
    if (s.range)
        j["range"] = Json{{"from", write_real(s.range->from)},
                          {"to", write_real(s.range->to)},
                          {"step", write_real(s.range->step)}};
    if (s.around)
        j["around"] = Json{{"centers", write_reals(s.around->centers)},
                           {"radius_steps", s.around->radius_steps}};
    return j;
}

NumericsConfig read_numerics(Json const& j, std::string const& where)
{
    check_keys(j, where, {"h", "window", "truncation", "paths", "tol", "max_iter", "y0"});
    NumericsConfig n;
    if (j.contains("h")) n.h = read_real(j["h"], where + ".h");
    if (j.contains("window"))
    {
        auto const w = read_reals(j["window"], where + ".window");
        if (w.size() != 2) fail(where + ".window", "expected [lo, hi]");
        n.window_lo = w[0];
        n.window_hi = w[1];
    }
    if (j.contains("truncation")) n.truncation = read_real(j["truncation"], where + ".truncation");
    if (j.contains("paths")) n.paths = read_int(j["paths"], where + ".paths");
    if (j.contains("tol")) n.tol = read_double(j["tol"], where + ".tol");
    if (j.contains("max_iter")) n.max_iter = static_cast<int>(read_int(j["max_iter"], where + ".max_iter"));
    if (j.contains("y0")) n.y0 = read_vector(j["y0"], where + ".y0");
    return n;
}

Json write_numerics(NumericsConfig const& n)
{
    Json j;
    j["h"] = write_real(n.h);
    j["window"] = Json::array({write_real(n.window_lo), write_real(n.window_hi)});
    if (n.truncation) j["truncation"] = write_real(*n.truncation);
    j["paths"] = n.paths;
    j["tol"] = n.tol;
    j["max_iter"] = n.max_iter;
    if (!n.y0.empty()) j["y0"] = n.y0;
    return j;
}

AnalysisConfig read_analysis(Json const& j, std::string const& where)
{
    check_keys(j, where, {"epsilon", "epsilon_factor", "shifts", "times", "max_points", "floor_seed"});
    AnalysisConfig a;
    if (j.contains("epsilon") && !j["epsilon"].is_null())
        a.epsilon = read_real(j["epsilon"], where + ".epsilon");
    if (j.contains("epsilon_factor"))
        a.epsilon_factor = read_real(j["epsilon_factor"], where + ".epsilon_factor");
    if (j.contains("shifts")) a.shifts = read_points(j["shifts"], where + ".shifts");
    if (j.contains("times")) a.times = read_points(j["times"], where + ".times");
    if (j.contains("max_points")) a.max_points = read_int(j["max_points"], where + ".max_points");
    if (j.contains("floor_seed"))
    {
        if (!j["floor_seed"].is_number_unsigned()) fail(where + ".floor_seed", "expected a nonnegative integer");
        a.floor_seed = j["floor_seed"].get<std::uint64_t>();
    }
    return a;
}

Json write_analysis(AnalysisConfig const& a)
{
    Json j;
    if (a.epsilon) j["epsilon"] = write_real(*a.epsilon);
    j["epsilon_factor"] = write_real(a.epsilon_factor);
    j["shifts"] = write_points(a.shifts);
    j["times"] = write_points(a.times);
    j["max_points"] = a.max_points;
    if (a.floor_seed) j["floor_seed"] = *a.floor_seed;
    return j;
}

RunConfig read_config(Json const& j)
{
    check_keys(j, "config",
               {"preset", "params", "system", "levy", "coefficients", "numerics", "analysis",
                "output", "seed"});
    RunConfig c;
    if (j.contains("preset"))
    {
        if (!j["preset"].is_string()) fail("preset", "expected a preset name");
        c.preset = j["preset"].get<std::string>();
        auto const names = preset_names();
        if (std::find(names.begin(), names.end(), *c.preset) == names.end())
        {
            std::string list;
            for (auto const& n : names) list += " " + n;
            fail("preset", "unknown preset '" + *c.preset + "' (known:" + list + ")");
        }
    }
    if (j.contains("params"))
    {
        if (!j["params"].is_object()) fail("params", "expected an object");
        if (!c.preset) fail("params", "preset parameters need a preset");
        for (auto const& item : j["params"].items())
            c.params[item.key()] = read_real(item.value(), "params." + item.key());
    }
    if (j.contains("system")) c.system = read_system(j["system"], "system");
    if (j.contains("levy")) c.levy = read_levy(j["levy"], "levy");
    if (j.contains("coefficients")) c.coefficients = read_coefficients(j["coefficients"], "coefficients");
    if (j.contains("numerics")) c.numerics = read_numerics(j["numerics"], "numerics");
    if (j.contains("analysis")) c.analysis = read_analysis(j["analysis"], "analysis");
    if (j.contains("output"))
    {
        auto const& o = j["output"];
        check_keys(o, "output", {"stride", "max_paths"});
        if (o.contains("stride")) c.output.stride = read_int(o["stride"], "output.stride");
        if (o.contains("max_paths")) c.output.max_paths = read_int(o["max_paths"], "output.max_paths");
        if (c.output.stride < 1) fail("output.stride", "must be at least 1");
        if (c.output.max_paths < 0) fail("output.max_paths", "must be nonnegative");
    }
    if (j.contains("seed"))
    {
        if (!j["seed"].is_number_unsigned()) fail("seed", "expected a nonnegative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (!c.preset && (!c.system || !c.levy || !c.coefficients))
        fail("config", "without a preset, system, levy and coefficients are all required");
    return c;
}
}  // namespace

RunConfig parse_config(std::string const& text)
{
    Json j;
    try
    {
        j = Json::parse(text);
    }
    catch (nlohmann::json::parse_error const& e)
    {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return read_config(j);
}

RunConfig load_config(std::string const& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string to_json(RunConfig const& c)
{
    Json j;
    if (c.preset) j["preset"] = *c.preset;
    if (!c.params.empty())
    {
        Json p = Json::object();
        for (auto const& [key, value] : c.params) p[key] = write_real(value);
        j["params"] = p;
    }
    if (c.system) j["system"] = write_system(*c.system);
    if (c.levy) j["levy"] = write_levy(*c.levy);
    if (c.coefficients) j["coefficients"] = write_coefficients(*c.coefficients);
    j["numerics"] = write_numerics(c.numerics);
    j["analysis"] = write_analysis(c.analysis);
    j["output"] = Json{{"stride", c.output.stride}, {"max_paths", c.output.max_paths}};
    j["seed"] = c.seed;
    return j.dump(2) + "\n";
}

Problem build_problem(RunConfig const& c)
{
    auto make_system = [](SystemConfig const& s) {
        try
        {
            return DichotomousSystem(s.a, s.p, s.k, s.omega);
        }
        catch (std::invalid_argument const& e)
        {
            throw ConfigError(std::string("system: ") + e.what());
        }
    };
    auto make_base = [&]() -> Problem {
        if (!c.preset) return Problem{"custom", make_system(*c.system), *c.levy, nullptr, {}};
        try
        {
            return make_preset(*c.preset, c.params);
        }
        catch (std::invalid_argument const& e)
        {
            throw ConfigError(std::string("params: ") + e.what());
        }
    };
    Problem p = make_base();
    bool const overridden = c.system || c.levy || c.coefficients;
    if (c.system) p.system = make_system(*c.system);
    if (c.levy)
    {
        NoiseDiagnostics diag;
        try
        {
            diag = validate_spec(*c.levy);
        }
        catch (std::invalid_argument const& e)
        {
            throw ConfigError(std::string("levy: ") + e.what());
        }
        if (!diag.ok)
        {
            std::string msg;
            for (auto const& s : diag.problems) msg += (msg.empty() ? "" : "; ") + s;
            throw ConfigError("levy: " + msg);
        }
        if (c.levy->drift.size() != c.levy->dim())
            throw ConfigError("levy: drift and Q dimensions differ");
        p.noise = *c.levy;
    }
    if (c.coefficients)
    {
        try
        {
            p.coefficients = std::make_shared<ExpressionCoefficients>(*c.coefficients);
        }
        catch (std::invalid_argument const& e)
        {
            throw ConfigError(std::string("coefficients: ") + e.what());
        }
    }
    if (overridden)
    {
        p.reference_mean = {};
        if (c.preset) p.name = *c.preset + "+custom";
    }
    if (p.coefficients->state_dim() != p.system.dim())
        throw ConfigError("coefficients have state dimension "
                          + std::to_string(p.coefficients->state_dim()) + " but the system has "
                          + std::to_string(p.system.dim()));
    if (p.coefficients->noise_dim() != p.noise.dim())
        throw ConfigError("coefficients have noise dimension "
                          + std::to_string(p.coefficients->noise_dim()) + " but Q is "
                          + std::to_string(p.noise.dim()) + "-dimensional");
    return p;
}

std::vector<std::int64_t> expand_points(PointSet const& set, double h)
{
    std::set<std::int64_t> idx;
    for (auto const& v : set.values) idx.insert(std::llround(v.value() / h));
    if (set.range)
    {
        double const from = set.range->from.value(), to = set.range->to.value();
        double const step = set.range->step.value();
        if (to >= from)
        {
            auto const n = static_cast<std::int64_t>(std::floor((to - from) / step + 1e-9));
            for (std::int64_t i = 0; i <= n; ++i)
                idx.insert(std::llround((from + static_cast<double>(i) * step) / h));
        }
    }
    if (set.around)
    {
        for (auto const& c : set.around->centers)
        {
            auto const mid = std::llround(c.value() / h);
            for (std::int64_t j = -set.around->radius_steps; j <= set.around->radius_steps; ++j)
                idx.insert(mid + j);
        }
    }
    return {idx.begin(), idx.end()};
}

double validate_numerics(RunConfig const& c, Problem const& problem)
{
    auto const& n = c.numerics;
    double const h = n.h.value();
    if (!(h > 0)) throw ConfigError("numerics.h: step must be positive");
    if (n.paths < 2) throw ConfigError("numerics.paths: need at least 2 paths");
    if (!(n.tol > 0)) throw ConfigError("numerics.tol: must be positive");
    if (n.max_iter < 1) throw ConfigError("numerics.max_iter: must be at least 1");
    double const lo = n.window_lo.value(), hi = n.window_hi.value();
    if (!(hi > lo)) throw ConfigError("numerics.window: need lo < hi");
    if (!n.y0.empty() && static_cast<Index>(n.y0.size()) != problem.system.dim())
        throw ConfigError("numerics.y0: expected " + std::to_string(problem.system.dim())
                          + " entries");
    if (n.truncation && !(n.truncation->value() > 0))
        throw ConfigError("numerics.truncation: must be positive");
    if (c.analysis.epsilon && !(c.analysis.epsilon->value() >= 0))
        throw ConfigError("analysis.epsilon: must be nonnegative");
    if (!(c.analysis.epsilon_factor.value() > 0))
        throw ConfigError("analysis.epsilon_factor: must be positive");
    if (c.analysis.max_points == 0 || c.analysis.max_points < -1)
        throw ConfigError("analysis.max_points: must be positive (or -1 for automatic)");

    double t_c = 0;
    if (n.truncation)
    {
        t_c = n.truncation->value();
    }
    else
    {
        t_c = 12.0 / resolve_constants(problem.system).omega;
    }
    double const tc_grid = static_cast<double>(std::max<std::int64_t>(1, std::llround(t_c / h))) * h;
    if (hi - lo < 2 * tc_grid)
        throw ConfigError("numerics.window: length " + format_double(hi - lo)
                          + " is shorter than 2 T_c = " + format_double(2 * tc_grid));

    auto const times = expand_points(c.analysis.times, h);
    auto shifts = expand_points(c.analysis.shifts, h);
    if (!times.empty())
    {
        double const slack = 1e-9 * std::max(1.0, std::abs(h));
        double const t_min = static_cast<double>(times.front()) * h;
        std::int64_t s_max = 0, s_min = 0;
        if (!shifts.empty())
        {
            s_max = std::max<std::int64_t>(0, shifts.back());
            s_min = std::min<std::int64_t>(0, shifts.front());
        }
        double const t_max = static_cast<double>(times.back() + s_max) * h;
        double const t_low = static_cast<double>(times.front() + s_min) * h;
        if (std::min(t_min, t_low) < lo + tc_grid - slack || t_max > hi - tc_grid + slack)
            throw ConfigError("numerics.window: [" + format_double(lo) + ", " + format_double(hi)
                              + "] must hold the analysis times plus shifts (["
                              + format_double(std::min(t_min, t_low)) + ", "
                              + format_double(t_max) + "]) with T_c = " + format_double(tc_grid)
                              + " margins on both sides");
    }
    return t_c;
}

}  // namespace apsde
