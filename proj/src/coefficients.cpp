#include "apsde/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "apsde/parallel.hpp"
#include "apsde/rng.hpp"

namespace apsde
{
namespace
{
double const kSqrt2 = std::sqrt(2.0);
double const kSqrt3 = std::sqrt(3.0);
double const kSqrt5 = std::sqrt(5.0);
}  // namespace

//---------------------------------------------------------------------------//

QuasiPeriodicSignal::QuasiPeriodicSignal(Expr combiner)
    : combiner_(std::move(combiner))
{
    if (combiner_.state_arity() > 0 || combiner_.mark_arity() > 0)
    {
        throw ExpressionError("signal '" + combiner_.source()
                              + "' may depend on t only");
    }
    frequencies_ = combiner_.trig_frequencies();
    bound_ = combiner_.eval_interval({-INFINITY, INFINITY});
    if (!bound_.bounded())
    {
        throw ExpressionError("signal '" + combiner_.source()
                              + "' is not certifiably bounded");
    }
}

double QuasiPeriodicSignal::max_period() const
{
    if (frequencies_.empty()) return 0;
    return 2 * std::numbers::pi / frequencies_.front();
}

//---------------------------------------------------------------------------//

Vector CoefficientSet::eval_f(double t, Vector const& y) const
{
    Vector out(state_dim());
    f_into(t, y, out);
    return out;
}

Matrix CoefficientSet::eval_g(double t, Vector const& y) const
{
    Matrix out(state_dim(), noise_dim());
    g_into(t, y, out);
    return out;
}

Vector CoefficientSet::eval_F(double t, Vector const& y, Vector const& x) const
{
    Vector out(state_dim());
    F_into(t, y, x, out);
    return out;
}

Vector CoefficientSet::eval_G(double t, Vector const& y, Vector const& x) const
{
    Vector out(state_dim());
    G_into(t, y, x, out);
    return out;
}

//---------------------------------------------------------------------------//
// The example41 benchmark. Its scalar y is the second state
// component; the first component is decoupled and stays at zero.

void Example41Coefficients::f_into(double t, ConstVecRef y, VecRef out) const
{
    double const phase = (std::cos(kSqrt2 * t) + std::sin(kSqrt3 * t))
                         / (17 + std::cos(kSqrt5 * t));
    double const u = y[1];
    out[0] = 0;
    out[1] = phase * u / (u * u + 1);
}

void Example41Coefficients::g_into(double t, ConstVecRef y, MatRef out) const
{
    out(0, 0) = 0;
    out(1, 0) = std::sin(y[1] + std::cos(kSqrt3 * t) + std::cos(kSqrt2 * t)) / 12;
}

void Example41Coefficients::F_into(double, ConstVecRef y, ConstVecRef, VecRef out) const
{
    out[0] = 0;
    out[1] = y[1] / 10;
}

void Example41Coefficients::G_into(double t, ConstVecRef y, ConstVecRef, VecRef out) const
{
    double const s = std::sin(kSqrt3 * t);
    out[0] = 0;
    out[1] = y[1] * s * s / (9 * (3 + std::cos(kSqrt2 * t) + std::cos(kSqrt5 * t)));
}

std::vector<QuasiPeriodicSignal> Example41Coefficients::time_signals() const
{
    return {
        QuasiPeriodicSignal::parse("(cos(sqrt(2)*t) + sin(sqrt(3)*t)) / "
                                   "(17 + cos(sqrt(5)*t))"),
        QuasiPeriodicSignal::parse("cos(sqrt(3)*t) + cos(sqrt(2)*t)"),
        QuasiPeriodicSignal::parse("sin(sqrt(3)*t)^2 / "
                                   "(3 + cos(sqrt(2)*t) + cos(sqrt(5)*t))"),
    };
}

//---------------------------------------------------------------------------//

OuForcedCoefficients::OuForcedCoefficients(double nu, double sigma, Real lipschitz)
    : nu_(nu), sigma_(sigma), lipschitz_(std::move(lipschitz))
{
    if (!(lipschitz_.value() > 0))
    {
        throw std::invalid_argument("declared Lipschitz constant must be "
                                    "positive");
    }
}

void OuForcedCoefficients::f_into(double t, ConstVecRef, VecRef out) const
{
    out[0] = std::sin(nu_ * t);
}

void OuForcedCoefficients::g_into(double, ConstVecRef, MatRef out) const
{
    out(0, 0) = sigma_;
}

void OuForcedCoefficients::F_into(double, ConstVecRef, ConstVecRef, VecRef out) const
{
    out[0] = 0;
}

void OuForcedCoefficients::G_into(double, ConstVecRef, ConstVecRef, VecRef out) const
{
    out[0] = 0;
}

std::vector<QuasiPeriodicSignal> OuForcedCoefficients::time_signals() const
{
    return {QuasiPeriodicSignal::parse("sin(" + format_double(nu_) + "*t)")};
}

//---------------------------------------------------------------------------//

GalerkinHeatCoefficients::GalerkinHeatCoefficients(GalerkinParams params)
    : params_(params)
{
    if (params_.modes < 1)
    {
        throw std::invalid_argument("galerkin_heat needs at least one mode");
    }
    if (params_.small_rate < 0 || params_.large_rate < 0)
    {
        throw std::invalid_argument("jump rates must be non-negative");
    }
}

Real GalerkinHeatCoefficients::lipschitz() const
{
    double const m = params_.modes;
    double const h2 = params_.ell_h * params_.ell_h;
    double const m2_small = mark_second_moment(
        UniformAnnulus{small_r_min, small_r_max}, params_.modes);
    double const m2_large = mark_second_moment(
        UniformAnnulus{large_r_min, large_r_max}, params_.modes);
    // E x_k^2 = E|x|^2 / m for the rotation-invariant annulus.
    double const l = std::max({params_.ell * params_.ell,
                               params_.small_rate * h2 * m2_small / m,
                               params_.large_rate * h2 * m2_large / m,
                               1e-6});
    return Real(l);
}

void GalerkinHeatCoefficients::f_into(double t, ConstVecRef y, VecRef out) const
{
    double const s = std::sin(kSqrt2 * t);
    for (Index k = 0; k < y.size(); ++k)
    {
        double const kk = static_cast<double>(k * k);
        out[k] = params_.forcing / (1 + kk) * s + params_.ell * std::sin(y[k]);
    }
}

void GalerkinHeatCoefficients::g_into(double t, ConstVecRef, MatRef out) const
{
    out.setZero();
    double const amp
        = params_.sigma * (1 + params_.g_modulation * std::sin(kSqrt3 * t));
    for (Index k = 0; k < out.rows(); ++k) out(k, k) = amp;
}

void GalerkinHeatCoefficients::F_into(double, ConstVecRef y, ConstVecRef x, VecRef out) const
{
    for (Index k = 0; k < y.size(); ++k)
        out[k] = params_.ell_h * x[k] * std::sin(y[k]);
}

void GalerkinHeatCoefficients::G_into(double, ConstVecRef y, ConstVecRef x, VecRef out) const
{
    for (Index k = 0; k < y.size(); ++k)
        out[k] = params_.ell_h * x[k] * std::sin(y[k]);
}

std::vector<QuasiPeriodicSignal> GalerkinHeatCoefficients::time_signals() const
{
    return {QuasiPeriodicSignal::parse("sin(sqrt(2)*t)"),
            QuasiPeriodicSignal::parse(
                "1 + " + format_double(params_.g_modulation) + "*sin(sqrt(3)*t)")};
}

//---------------------------------------------------------------------------//

ExpressionCoefficients::ExpressionCoefficients(ExpressionCoefficientSpec spec)
    : spec_(std::move(spec))
{
    auto const d = static_cast<Index>(spec_.f.size());
    Index const m = spec_.noise_dim;
    if (d < 1) throw std::invalid_argument("expression coefficients need f");
    if (m < 1) throw std::invalid_argument("noise dimension must be positive");
    if (!(spec_.lipschitz.value() > 0))
    {
        throw std::invalid_argument("declared Lipschitz constant must be "
                                    "positive");
    }
    if (!spec_.g.empty() && static_cast<Index>(spec_.g.size()) != d * m)
    {
        throw std::invalid_argument("g needs d * dim_noise entries");
    }
    for (auto const* v : {&spec_.F, &spec_.G})
    {
        if (!v->empty() && static_cast<Index>(v->size()) != d)
            throw std::invalid_argument("F and G need d entries");
    }

    auto load = [&](std::vector<std::string> const& src,
                    std::vector<Expr>& dst,
                    bool marks_allowed,
                    char const* what) {
        for (auto const& text : src)
        {
            Expr e = Expr::parse(text);
            if (static_cast<Index>(e.state_arity()) > d)
                throw ExpressionError(std::string(what) + " entry '" + text
                                      + "' refers to a state index >= d");
            if (!marks_allowed && e.mark_arity() > 0)
                throw ExpressionError(std::string(what) + " entry '" + text
                                      + "' may not use marks");
            if (static_cast<Index>(e.mark_arity()) > m)
                throw ExpressionError(std::string(what) + " entry '" + text
                                      + "' refers to a mark index >= dim_noise");
            (void)e.trig_frequencies();
            dst.push_back(std::move(e));
        }
    };
    load(spec_.f, f_, false, "f");
    load(spec_.g, g_, false, "g");
    load(spec_.F, F_, true, "F");
    load(spec_.G, G_, true, "G");

    std::vector<Interval> const origin(d, Interval{0, 0});
    for (auto const* v : {&f_, &g_})
    {
        for (auto const& e : *v)
        {
            if (!e.eval_interval({-INFINITY, INFINITY}, origin).bounded())
                throw ExpressionError("'" + e.source()
                                      + "' is not certifiably bounded in t at "
                                        "y = 0");
        }
    }
    f_mark_free_ = std::all_of(F_.begin(), F_.end(), [](Expr const& e) {
        return e.mark_arity() == 0;
    });
    g_zero_ = std::all_of(g_.begin(), g_.end(), [](Expr const& e) {
        return e.is_constant() && e.eval(0) == 0;
    });
}

void ExpressionCoefficients::f_into(double t, ConstVecRef y, VecRef out) const
{
    std::span<double const> ys(y.data(), static_cast<std::size_t>(y.size()));
    for (std::size_t i = 0; i < f_.size(); ++i) out[i] = f_[i].eval(t, ys);
}

void ExpressionCoefficients::g_into(double t, ConstVecRef y, MatRef out) const
{
    if (g_.empty())
    {
        out.setZero();
        return;
    }
    std::span<double const> ys(y.data(), static_cast<std::size_t>(y.size()));
    Index const m = spec_.noise_dim;
    for (Index i = 0; i < out.rows(); ++i)
        for (Index j = 0; j < m; ++j)
            out(i, j) = g_[static_cast<std::size_t>(i * m + j)].eval(t, ys);
}

void ExpressionCoefficients::F_into(double t, ConstVecRef y, ConstVecRef x, VecRef out) const
{
    if (F_.empty())
    {
        out.setZero();
        return;
    }
    std::span<double const> ys(y.data(), static_cast<std::size_t>(y.size()));
    std::span<double const> xs(x.data(), static_cast<std::size_t>(x.size()));
    for (std::size_t i = 0; i < F_.size(); ++i) out[i] = F_[i].eval(t, ys, xs);
}

void ExpressionCoefficients::G_into(double t, ConstVecRef y, ConstVecRef x, VecRef out) const
{
    if (G_.empty())
    {
        out.setZero();
        return;
    }
    std::span<double const> ys(y.data(), static_cast<std::size_t>(y.size()));
    std::span<double const> xs(x.data(), static_cast<std::size_t>(x.size()));
    for (std::size_t i = 0; i < G_.size(); ++i) out[i] = G_[i].eval(t, ys, xs);
}

//---------------------------------------------------------------------------//

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights)
{
    nodes.assign(n, 0);
    weights.assign(n, 0);
    for (int i = 0; i < n; ++i)
    {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int iter = 0; iter < 100; ++iter)
        {
            double p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k)
            {
                double const p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1);
            double const dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        nodes[i] = x;
        weights[i] = 2 / ((1 - x * x) * dp * dp);
    }
}

namespace
{
constexpr int kRadialNodes = 16;

//! Probability nodes for the uniform law on the shell a <= |x| <= b in R^d.
void annulus_rule(UniformAnnulus const& ann, Index dim,
                  std::vector<Vector>& nodes, std::vector<double>& weights,
                  double scale)
{
    std::vector<double> xi, wi;
    gauss_legendre(kRadialNodes, xi, wi);
    double const a = ann.r_min, b = ann.r_max;
    double const mid = 0.5 * (a + b), half = 0.5 * (b - a);
    auto const d = static_cast<double>(dim);
    double const norm = std::pow(b, d) - std::pow(a, d);

    // Antipodal unit vectors: odd moments vanish and E u_i u_j = delta_ij / d.
    std::vector<Vector> dirs;
    for (Index i = 0; i < dim; ++i)
    {
        dirs.push_back(Vector::Unit(dim, i));
        dirs.push_back(-Vector::Unit(dim, i));
    }
    double const wdir = 1.0 / static_cast<double>(dirs.size());
    for (int i = 0; i < kRadialNodes; ++i)
    {
        double const r = mid + half * xi[i];
        double const density = d * std::pow(r, d - 1) / norm;
        for (auto const& u : dirs)
        {
            nodes.push_back(r * u);
            weights.push_back(scale * half * wi[i] * density * wdir);
        }
    }
}
}  // namespace

Compensator::Compensator(CoefficientSet const& cs, LevyProcessSpec const& spec)
    : cs_(&cs)
{
    std::set<std::string> methods;
    Index const dim = spec.dim();
    for (auto const& comp : spec.jumps)
    {
        double const rate = comp.rate.value();
        if (comp.region != JumpRegion::small || rate <= 0) continue;
        total_rate_ += rate;
        if (cs.F_mark_independent()) continue;
        if (cs.F_linear_in_mark())
        {
            if (mean_mark_.size() == 0) mean_mark_ = Vector::Zero(dim);
            mean_mark_ += rate * mark_mean(comp.marks, dim);
            continue;
        }
        if (auto const* pm = std::get_if<PointMass>(&comp.marks))
        {
            nodes_.push_back(pm->point);
            weights_.push_back(rate);
            methods.insert("atoms");
        }
        else if (auto const* mix = std::get_if<DiscreteMixture>(&comp.marks))
        {
            for (std::size_t i = 0; i < mix->atoms.size(); ++i)
            {
                nodes_.push_back(mix->atoms[i]);
                weights_.push_back(rate * mix->weights[i]);
            }
            methods.insert("atoms");
        }
        else
        {
            annulus_rule(std::get<UniformAnnulus>(comp.marks), dim, nodes_,
                         weights_, rate);
            methods.insert("gauss_legendre_radial_x_cross_polytope");
        }
    }
    zero_ = total_rate_ == 0 || !cs.has_small_jumps();
    closed_form_ = !zero_ && cs.F_mark_independent();
    linear_ = !zero_ && !closed_form_ && cs.F_linear_in_mark();
    if (zero_)
        method_ = "none";
    else if (closed_form_)
        method_ = "closed_form";
    else if (linear_)
        method_ = "linear_in_mark";
    else
    {
        for (auto const& m : methods)
            method_ += (method_.empty() ? "" : "+") + m;
    }
    nodes_.shrink_to_fit();
}

void Compensator::eval_into(double t, ConstVecRef y, VecRef out, VecRef scratch) const
{
    out.setZero();
    if (zero_) return;
    if (closed_form_)
    {
        Vector const x = Vector::Zero(cs_->noise_dim());
        cs_->F_into(t, y, x, scratch);
        out = total_rate_ * scratch;
        return;
    }
    if (linear_)
    {
        cs_->F_into(t, y, mean_mark_, out);
        return;
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i)
    {
        cs_->F_into(t, y, nodes_[i], scratch);
        out += weights_[i] * scratch;
    }
}

Vector Compensator::eval(double t, Vector const& y) const
{
    Vector out(cs_->state_dim());
    Vector scratch(cs_->state_dim());
    eval_into(t, y, out, scratch);
    return out;
}

//---------------------------------------------------------------------------//

LipschitzReport verify_lipschitz(CoefficientSet const& cs,
                                 LevyProcessSpec const& spec,
                                 LipschitzOptions const& options)
{
    if (options.n_samples < 1000)
    {
        throw std::invalid_argument("verify_lipschitz needs at least 1000 "
                                    "samples");
    }
    Index const d = cs.state_dim();
    Index const m = cs.noise_dim();
    if (spec.dim() != m)
    {
        throw std::invalid_argument("noise dimension of the spec does not "
                                    "match the coefficients");
    }
    Matrix const sqrt_q = covariance_sqrt(spec.wiener.covariance);

    // Fixed mark samples per component, shared by all pairs.
    struct WeightedMark
    {
        Vector x;
        double w;
    };
    std::vector<WeightedMark> small_marks, large_marks;
    RandomStream mark_rng({options.seed, 1, static_cast<std::uint32_t>(StreamTag::verification)});
    for (auto const& comp : spec.jumps)
    {
        double const rate = comp.rate.value();
        if (rate <= 0) continue;
        bool const small = comp.region == JumpRegion::small;
        if (small && !cs.has_small_jumps()) continue;
        if (!small && !cs.has_large_jumps()) continue;
        auto& dst = small ? small_marks : large_marks;
        int const n = (small && cs.F_mark_independent()) ? 1 : options.mark_samples;
        for (int j = 0; j < n; ++j)
        {
            Vector x;
            do
            {
                x = sample_mark(comp.marks, m, mark_rng);
            } while (!in_region(x, comp.region));
            dst.push_back({std::move(x), rate / n});
        }
    }

    LipschitzReport report;
    report.declared = cs.lipschitz();
    RandomStream rng({options.seed, 0, static_cast<std::uint32_t>(StreamTag::verification)});
    Vector y(d), z(d), a(d), b(d);
    Matrix ga(d, m), gb(d, m);
    double const r = options.box_radius;
    for (int i = 0; i < options.n_samples; ++i)
    {
        double const t = rng.uniform(-options.time_range, options.time_range);
        for (Index k = 0; k < d; ++k) y[k] = rng.uniform(-r, r);
        if (i % 2 == 0)
        {
            for (Index k = 0; k < d; ++k) z[k] = rng.uniform(-r, r);
        }
        else
        {
            for (Index k = 0; k < d; ++k) z[k] = y[k] + 1e-3 * r * rng.normal();
        }
        double const dist2 = (y - z).squaredNorm();
        if (dist2 == 0) continue;

        cs.f_into(t, y, a);
        cs.f_into(t, z, b);
        report.observed_f = std::max(report.observed_f, (a - b).squaredNorm() / dist2);

        if (cs.has_diffusion())
        {
            cs.g_into(t, y, ga);
            cs.g_into(t, z, gb);
            report.observed_g = std::max(
                report.observed_g, ((ga - gb) * sqrt_q).squaredNorm() / dist2);
        }

        auto jump_ratio = [&](std::vector<WeightedMark> const& marks, bool small) {
            double acc = 0;
            for (auto const& wm : marks)
            {
                if (small)
                {
                    cs.F_into(t, y, wm.x, a);
                    cs.F_into(t, z, wm.x, b);
                }
                else
                {
                    cs.G_into(t, y, wm.x, a);
                    cs.G_into(t, z, wm.x, b);
                }
                acc += wm.w * (a - b).squaredNorm();
            }
            return acc / dist2;
        };
        report.observed_F = std::max(report.observed_F, jump_ratio(small_marks, true));
        report.observed_G = std::max(report.observed_G, jump_ratio(large_marks, false));
    }
    double const limit = report.declared.value() * 1.05;
    report.pass = report.observed_f <= limit && report.observed_g <= limit
                  && report.observed_F <= limit && report.observed_G <= limit;
    return report;
}

//---------------------------------------------------------------------------//

AlmostPeriodScan scan_almost_periods(std::function<double(double)> const& signal,
                                     ScanOptions const& options)
{
    if (!(options.epsilon > 0))
        throw std::invalid_argument("scan epsilon must be positive");
    if (!(options.grid_step > 0) || !(options.horizon > options.grid_step))
        throw std::invalid_argument("scan needs 0 < grid_step < horizon");
    double const span = options.t_span > 0 ? options.t_span : options.horizon;
    auto const n_tau = static_cast<std::size_t>(
        std::floor(options.horizon / options.grid_step + 1e-9));
    auto const n_t = static_cast<std::size_t>(
        std::floor(span / options.grid_step + 1e-9)) + 1;

    std::vector<double> values(n_t + n_tau);
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = signal(static_cast<double>(i) * options.grid_step);

    // sup_gap[k] holds the sup for tau = (k + 1) * step, or -1 if rejected.
    std::vector<double> sup(n_tau, -1);
    parallel_chunks(n_tau, 256, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k)
        {
            std::size_t const shift = k + 1;
            double worst = 0;
            for (std::size_t i = 0; i < n_t; ++i)
            {
                worst = std::max(worst, std::abs(values[i + shift] - values[i]));
                if (worst > options.epsilon) break;
            }
            if (worst <= options.epsilon) sup[k] = worst;
        }
    });

    AlmostPeriodScan out;
    double prev = 0;
    for (std::size_t k = 0; k < n_tau; ++k)
    {
        if (sup[k] < 0) continue;
        double const tau = static_cast<double>(k + 1) * options.grid_step;
        out.periods.push_back(tau);
        out.sup_gap.push_back(sup[k]);
        out.max_gap = std::max(out.max_gap, tau - prev);
        prev = tau;
    }
    out.found = !out.periods.empty();
    if (!out.found)
    {
        out.max_gap = INFINITY;
        out.message = "not AP at this resolution: no epsilon-almost period in "
                      "(0, "
                      + format_double(options.horizon) + "]";
    }
    return out;
}

AlmostPeriodScan scan_almost_periods(QuasiPeriodicSignal const& signal,
                                     ScanOptions const& options)
{
    return scan_almost_periods([&](double t) { return signal(t); }, options);
}

//---------------------------------------------------------------------------//

namespace
{
class ParamReader
{
  public:
    ParamReader(std::string preset, PresetParams const& params)
        : preset_(std::move(preset)), params_(params)
    {
    }

    Real get(std::string const& key, Real fallback)
    {
        known_.insert(key);
        auto it = params_.find(key);
        return it == params_.end() ? fallback : it->second;
    }

    void finish() const
    {
        for (auto const& [key, value] : params_)
        {
            if (!known_.count(key))
            {
                std::string allowed;
                for (auto const& k : known_) allowed += " " + k;
                throw std::invalid_argument("preset '" + preset_
                                            + "' has no parameter '" + key
                                            + "' (known:" + allowed + ")");
            }
        }
    }

  private:
    std::string preset_;
    PresetParams const& params_;
    std::set<std::string> known_;
};

LevyProcessSpec scalar_noise()
{
    LevyProcessSpec spec;
    spec.drift = Vector::Zero(1);
    spec.wiener.covariance = Matrix::Identity(1, 1);
    return spec;
}

Problem make_example41(PresetParams const& params)
{
    ParamReader p("example41", params);
    Real const small_rate = p.get("small_rate", Rational(1));
    Real const b = p.get("b", Rational(1));
    p.finish();

    Matrix a{{8.0, 0.0}, {0.0, -6.0}};
    Matrix proj{{0.0, 0.0}, {0.0, 1.0}};
    LevyProcessSpec noise = scalar_noise();
    noise.jumps.push_back({small_rate, UniformAnnulus{0.1, 0.9}, JumpRegion::small});
    noise.jumps.push_back({b, UniformAnnulus{1.0, 2.0}, JumpRegion::large});
    return Problem{"example41",
                   DichotomousSystem(a, proj, Real(Rational(1)), Real(Rational(6))),
                   std::move(noise),
                   std::make_shared<Example41Coefficients>(),
                   {}};
}

Problem make_ou_forced(PresetParams const& params)
{
    ParamReader p("ou_forced", params);
    Real const a = p.get("a", Rational(1));
    Real const nu = p.get("nu", Real(std::sqrt(2.0)));
    Real const sigma = p.get("sigma", Rational(3, 10));
    Real const l = p.get("L", Rational(1, 100));
    p.finish();
    if (!(a.value() > 0))
        throw std::invalid_argument("ou_forced needs a > 0");

    double const av = a.value(), nv = nu.value();
    return Problem{
        "ou_forced",
        DichotomousSystem(Matrix::Constant(1, 1, -av), Matrix::Identity(1, 1),
                          Real(Rational(1)), a),
        scalar_noise(),
        std::make_shared<OuForcedCoefficients>(nv, sigma.value(), l),
        [av, nv](double t) {
            return Vector::Constant(
                1, (av * std::sin(nv * t) - nv * std::cos(nv * t)) / (av * av + nv * nv));
        }};
}

Problem make_galerkin(PresetParams const& params)
{
    ParamReader p("galerkin_heat", params);
    GalerkinParams g;
    Real const modes = p.get("modes", Rational(g.modes));
    g.a0 = p.get("a0", Rational(5, 2)).value();
    g.forcing = p.get("forcing", Rational(1)).value();
    g.ell = p.get("ell", Rational(1, 20)).value();
    g.ell_h = p.get("ell_h", Rational(1, 10)).value();
    g.sigma = p.get("sigma", Rational(3, 10)).value();
    g.g_modulation = p.get("g_modulation", Rational(1, 2)).value();
    Real const small_rate = p.get("small_rate", Rational(1));
    Real const b = p.get("b", Rational(1, 2));
    p.finish();
    if (modes.value() != std::round(modes.value()) || modes.value() < 1
        || modes.value() > 256)
        throw std::invalid_argument("galerkin_heat modes must be an integer in "
                                    "[1, 256]");
    g.modes = static_cast<int>(modes.value());
    g.small_rate = small_rate.value();
    g.large_rate = b.value();

    Index const m = g.modes;
    Matrix a = Matrix::Zero(m, m);
    Matrix proj = Matrix::Zero(m, m);
    double gap = INFINITY;
    for (Index k = 0; k < m; ++k)
    {
        double const lambda = g.a0 - static_cast<double>(k * k);
        a(k, k) = lambda;
        proj(k, k) = lambda < 0 ? 1 : 0;
        gap = std::min(gap, std::abs(lambda));
    }
    std::optional<Real> k_decl, omega_decl;
    if (gap > 0)
    {
        k_decl = Real(Rational(1));
        omega_decl = Real(gap);
    }

    LevyProcessSpec noise;
    noise.drift = Vector::Zero(m);
    noise.wiener.covariance = Matrix::Zero(m, m);
    for (Index k = 0; k < m; ++k)
        noise.wiener.covariance(k, k) = 1.0 / static_cast<double>((1 + k) * (1 + k));
    using GH = GalerkinHeatCoefficients;
    noise.jumps.push_back({small_rate,
                           UniformAnnulus{GH::small_r_min, GH::small_r_max},
                           JumpRegion::small});
    noise.jumps.push_back({b,
                           UniformAnnulus{GH::large_r_min, GH::large_r_max},
                           JumpRegion::large});

    std::function<Vector(double)> mean;
    if (g.ell == 0 && g.ell_h == 0 && gap > 0)
    {
        Vector lambdas = a.diagonal();
        double const forcing = g.forcing;
        mean = [lambdas, forcing](double t) {
            double const nu = std::sqrt(2.0);
            Vector out(lambdas.size());
            for (Index k = 0; k < lambdas.size(); ++k)
            {
                double const c = forcing / (1 + static_cast<double>(k * k));
                double const l = lambdas[k];
                out[k] = c * (-l * std::sin(nu * t) - nu * std::cos(nu * t))
                         / (l * l + nu * nu);
            }
            return out;
        };
    }
    return Problem{"galerkin_heat",
                   DichotomousSystem(a, proj, k_decl, omega_decl),
                   std::move(noise),
                   std::make_shared<GalerkinHeatCoefficients>(g),
                   std::move(mean)};
}
}  // namespace

std::vector<std::string> preset_names()
{
    return {"example41", "ou_forced", "galerkin_heat"};
}

Problem make_preset(std::string const& name, PresetParams const& params)
{
    if (name == "example41") return make_example41(params);
    if (name == "ou_forced") return make_ou_forced(params);
    if (name == "galerkin_heat") return make_galerkin(params);
    throw std::invalid_argument("unknown preset '" + name
                                + "' (known: example41, ou_forced, "
                                  "galerkin_heat)");
}

}  // namespace apsde
