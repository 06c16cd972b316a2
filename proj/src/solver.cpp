#include "apsde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "apsde/parallel.hpp"

namespace apsde
{

//---------------------------------------------------------------------------//
// Conditions
//---------------------------------------------------------------------------//

ConditionReport check_conditions(Real k, Real omega, Real l, Real b)
{
    Real const zero(Rational(0));
    if (!(zero < k) || !(zero < omega) || !(zero < l))
    {
        throw std::invalid_argument("K, omega and L must be positive");
    }
    if (b < zero)
    {
        throw std::invalid_argument("large-jump rate b must be nonnegative");
    }
    Real const one(Rational(1)), two(Rational(2));
    ConditionReport r;
    r.k = k;
    r.omega = omega;
    r.l = l;
    r.b = b;
    Real const omega2 = omega * omega;
    Real const sixteen_k2l = Real(Rational(16)) * k * k * l;
    r.lhs = (one + two * b) / omega2 + two / omega;
    r.eta = sixteen_k2l * r.lhs;
    r.threshold_existence = one / sixteen_k2l;
    r.threshold_distribution = one / (two * sixteen_k2l);
    r.existence = r.lhs < r.threshold_existence;
    r.distribution = r.lhs < r.threshold_distribution;
    // lhs < thr  <=>  b < ((thr - 2/omega) omega^2 - 1) / 2
    auto bound = [&](Real const& thr) {
        return ((thr - two / omega) * omega2 - one) / two;
    };
    r.b_bound_existence = bound(r.threshold_existence);
    r.b_bound_distribution = bound(r.threshold_distribution);
    r.exact = k.is_exact() && omega.is_exact() && l.is_exact() && b.is_exact()
              && r.lhs.is_exact() && r.eta.is_exact()
              && r.threshold_distribution.is_exact()
              && r.b_bound_existence.is_exact()
              && r.b_bound_distribution.is_exact();
    return r;
}

namespace
{
nlohmann::json real_json(Real const& v)
{
    nlohmann::json j;
    j["value"] = v.value();
    if (v.is_exact())
        j["exact"] = v.exact()->str();
    else
        j["exact"] = nullptr;
    return j;
}
}  // namespace

std::string to_json(ConditionReport const& r)
{
    nlohmann::json j;
    j["K"] = real_json(r.k);
    j["omega"] = real_json(r.omega);
    j["L"] = real_json(r.l);
    j["b"] = real_json(r.b);
    j["lhs"] = real_json(r.lhs);
    j["eta"] = real_json(r.eta);
    j["threshold_existence"] = real_json(r.threshold_existence);
    j["threshold_distribution"] = real_json(r.threshold_distribution);
    j["b_bound_existence"] = real_json(r.b_bound_existence);
    j["b_bound_distribution"] = real_json(r.b_bound_distribution);
    j["existence"] = r.existence;
    j["distribution"] = r.distribution;
    j["joint"] = r.joint();
    j["exact"] = r.exact;
    return j.dump(2);
}

//---------------------------------------------------------------------------//
// Ensembles
//---------------------------------------------------------------------------//

PathEnsemble::PathEnsemble(TimeGrid grid, Index paths, Index dim)
    : grid_(grid), paths_(paths), dim_(dim)
{
    if (paths <= 0 || dim <= 0)
    {
        throw std::invalid_argument("ensemble needs at least one path and "
                                    "one state dimension");
    }
    data_.assign(static_cast<std::size_t>(paths) * static_cast<std::size_t>(dim)
                     * static_cast<std::size_t>(grid.size()),
                 0.0);
}

namespace
{
std::pair<Index, Index> node_range(TimeGrid const& grid, std::optional<Window> w)
{
    if (!w) return {0, grid.size()};
    Index lo = 0, hi = grid.size();
    while (lo < hi && grid.time(lo) < w->lo - 1e-9 * grid.step()) ++lo;
    while (hi > lo && grid.time(hi - 1) > w->hi + 1e-9 * grid.step()) --hi;
    if (lo >= hi)
    {
        throw std::invalid_argument("window has no grid nodes");
    }
    return {lo, hi};
}
}  // namespace

double sup_second_moment(PathEnsemble const& ens, std::optional<Window> window)
{
    auto [lo, hi] = node_range(ens.grid(), window);
    double acc = 0;
    for (Index p = 0; p < ens.paths(); ++p)
    {
        auto y = ens.path(p);
        double m = 0;
        for (Index k = lo; k < hi; ++k) m = std::max(m, y.col(k).squaredNorm());
        acc += m;
    }
    return acc / static_cast<double>(ens.paths());
}

double l2_increment(PathEnsemble const& ens, double t, double r)
{
    Index const i = ens.grid().position(t);
    Index const j = ens.grid().position(r);
    double acc = 0;
    for (Index p = 0; p < ens.paths(); ++p)
    {
        auto y = ens.path(p);
        acc += (y.col(i) - y.col(j)).squaredNorm();
    }
    return acc / static_cast<double>(ens.paths());
}

Matrix mean_curve(PathEnsemble const& ens)
{
    Matrix mean = Matrix::Zero(ens.dim(), ens.nodes());
    for (Index p = 0; p < ens.paths(); ++p) mean += ens.path(p);
    return mean / static_cast<double>(ens.paths());
}

std::vector<double> second_moment_curve(PathEnsemble const& ens)
{
    std::vector<double> out(ens.nodes(), 0.0);
    for (Index p = 0; p < ens.paths(); ++p)
    {
        auto y = ens.path(p);
        for (Index k = 0; k < ens.nodes(); ++k) out[k] += y.col(k).squaredNorm();
    }
    for (auto& v : out) v /= static_cast<double>(ens.paths());
    return out;
}

void write_ensemble_csv(std::ostream& os, PathEnsemble const& ens, Index stride,
                        Index max_paths, std::optional<Window> window)
{
    if (stride < 1) stride = 1;
    Index const paths = max_paths < 0 ? ens.paths() : std::min(max_paths, ens.paths());
    auto [lo, hi] = node_range(ens.grid(), window);
    os << "t,path";
    for (Index i = 0; i < ens.dim(); ++i) os << ",y" << i;
    os << '\n';
    for (Index p = 0; p < paths; ++p)
    {
        auto y = ens.path(p);
        for (Index k = lo; k < hi; k += stride)
        {
            os << format_double(ens.grid().time(k)) << ',' << p;
            for (Index i = 0; i < ens.dim(); ++i) os << ',' << format_double(y(i, k));
            os << '\n';
        }
    }
}

void write_mean_curve_csv(std::ostream& os, PathEnsemble const& ens, Index stride,
                          std::function<Vector(double)> const& reference,
                          std::optional<Window> window)
{
    if (stride < 1) stride = 1;
    Matrix const mean = mean_curve(ens);
    auto const m2 = second_moment_curve(ens);
    auto [lo, hi] = node_range(ens.grid(), window);
    os << "t";
    for (Index i = 0; i < ens.dim(); ++i) os << ",mean" << i;
    os << ",second_moment";
    if (reference)
        for (Index i = 0; i < ens.dim(); ++i) os << ",reference" << i;
    os << '\n';
    for (Index k = lo; k < hi; k += stride)
    {
        double const t = ens.grid().time(k);
        os << format_double(t);
        for (Index i = 0; i < ens.dim(); ++i) os << ',' << format_double(mean(i, k));
        os << ',' << format_double(m2[k]);
        if (reference)
        {
            Vector const r = reference(t);
            for (Index i = 0; i < ens.dim(); ++i) os << ',' << format_double(r(i));
        }
        os << '\n';
    }
}

//---------------------------------------------------------------------------//
// Operator
//---------------------------------------------------------------------------//

DichotomyConstants resolve_constants(DichotomousSystem const& sys)
{
    DichotomyConstants c;
    if (sys.k() && sys.omega())
    {
        c.k = sys.k()->value();
        c.omega = sys.omega()->value();
        c.declared = true;
        return c;
    }
    std::vector<double> grid(50);
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = 2.0 * static_cast<double>(i) / static_cast<double>(grid.size() - 1);
    auto const est = estimate_constants(sys, grid);
    c.k = sys.k() ? sys.k()->value() : est.k_hat;
    c.omega = sys.omega() ? sys.omega()->value() : est.omega_hat;
    return c;
}

struct MildOperator::Workspace
{
    Matrix u, v;
    Vector f, c, scratch, gdw, z, tmp, fwd, bwd;
    Matrix g;
};

MildOperator::~MildOperator() = default;

MildOperator::MildOperator(DichotomousSystem const& sys, CoefficientSet const& cs,
                           LevyProcessSpec const& spec, double step, double truncation)
    : sys_(&sys), cs_(&cs), compensator_(cs, spec), h_(step), truncation_(truncation)
{
    d_ = sys.dim();
    m_ = cs.noise_dim();
    if (cs.state_dim() != d_)
    {
        throw std::invalid_argument("coefficient state dimension "
                                    + std::to_string(cs.state_dim())
                                    + " does not match the linear part ("
                                    + std::to_string(d_) + ")");
    }
    if (spec.dim() != m_)
    {
        throw std::invalid_argument("coefficient noise dimension "
                                    + std::to_string(m_)
                                    + " does not match the noise ("
                                    + std::to_string(spec.dim()) + ")");
    }
    if (!(step > 0) || !std::isfinite(step))
    {
        throw std::invalid_argument("time step must be positive and finite");
    }
    if (!(truncation > 0))
    {
        throw std::invalid_argument("truncation T_c must be positive");
    }
    Matrix const& a = sys.generator();
    p_ = sys.projection();
    j_ = sys.complement();
    ap_ = a * p_;
    aj_ = a * j_;
    e_fwd_ = matrix_exp(ap_, h_) * p_;
    e_bwd_ = matrix_exp(-aj_, h_) * j_;
    phi_fwd_ = integrated_exp(ap_, h_) * p_;
    phi_bwd_ = integrated_exp(-aj_, h_) * j_;
    if (std::isfinite(truncation))
    {
        n_c_ = std::max<std::int64_t>(1, std::llround(truncation / h_));
        double const tc = static_cast<double>(n_c_) * h_;
        e_fwd_nc_ = matrix_exp(ap_, tc) * p_;
        e_bwd_nc_ = matrix_exp(-aj_, tc) * j_;
    }
    else
    {
        n_c_ = std::numeric_limits<std::int64_t>::max();
    }
    // Forward IVP propagators are only needed by simulate(); an unstable
    // part can overflow them for huge steps, which is reported then.
    try
    {
        e_full_ = matrix_exp(a, h_);
        phi_full_ = integrated_exp(a, h_);
    }
    catch (MatrixExpOverflow const&)
    {
        e_full_.resize(0, 0);
        phi_full_.resize(0, 0);
    }
}

std::unique_ptr<MildOperator::Workspace> MildOperator::make_workspace(Index nodes) const
{
    auto ws = std::make_unique<Workspace>();
    ws->u.resize(d_, nodes);
    ws->v.resize(d_, nodes);
    for (Vector* v : {&ws->f, &ws->c, &ws->scratch, &ws->gdw, &ws->z, &ws->tmp,
                      &ws->fwd, &ws->bwd})
        v->setZero(d_);
    ws->g.setZero(d_, m_);
    return ws;
}

// Writes the step's drift-minus-compensator into ws.f and g dW into ws.gdw.
void MildOperator::frozen_terms(NoiseRealization const& noise, Index k, double t,
                                Eigen::Ref<Vector const> y, Workspace& ws) const
{
    cs_->f_into(t, y, ws.f);
    if (!compensator_.is_zero())
    {
        compensator_.eval_into(t, y, ws.c, ws.scratch);
        ws.f -= ws.c;
    }
    if (cs_->has_diffusion())
    {
        cs_->g_into(t, y, ws.g);
        ws.gdw.noalias() = ws.g * noise.increments.col(k);
    }
    else
    {
        ws.gdw.setZero();
    }
}

namespace
{
void check_noise(NoiseRealization const& noise, Index nodes, Index m)
{
    if (noise.grid.size() != nodes)
    {
        throw std::invalid_argument("path and noise grids differ");
    }
    if (noise.dim() != m)
    {
        throw std::invalid_argument("noise dimension does not match the "
                                    "coefficients");
    }
}
}  // namespace

void MildOperator::apply(NoiseRealization const& noise, Eigen::Ref<Matrix const> in,
                         Eigen::Ref<Matrix> out, Workspace& ws) const
{
    Index const n = in.cols();
    check_noise(noise, n, m_);
    if (in.rows() != d_ || out.rows() != d_ || out.cols() != n)
    {
        throw std::invalid_argument("path shape does not match the state");
    }
    if (ws.u.cols() != n)
    {
        ws.u.resize(d_, n);
        ws.v.resize(d_, n);
    }
    auto& u = ws.u;
    auto& v = ws.v;
    u.col(0).setZero();
    v.col(n - 1).setZero();

    bool const small = cs_->has_small_jumps();
    bool const large = cs_->has_large_jumps();
    std::size_t next_jump = 0;
    for (Index k = 0; k + 1 < n; ++k)
    {
        double const t = noise.grid.time(k);
        frozen_terms(noise, k, t, in.col(k), ws);
        ws.fwd.noalias() = phi_fwd_ * ws.f;
        ws.fwd.noalias() += e_fwd_ * ws.gdw;
        ws.bwd.noalias() = phi_bwd_ * ws.f;
        ws.bwd.noalias() += j_ * ws.gdw;

        while (next_jump < noise.jumps.size()
               && noise.local_step(noise.jumps[next_jump]) <= k)
        {
            JumpEvent const& jump = noise.jumps[next_jump++];
            if (noise.local_step(jump) < k) continue;
            bool const is_small = jump.region == JumpRegion::small;
            if ((is_small && !small) || (!is_small && !large)) continue;
            if (is_small)
                cs_->F_into(t, in.col(k), jump.mark, ws.z);
            else
                cs_->G_into(t, in.col(k), jump.mark, ws.z);
            double const before = jump.offset * h_;
            double const after = h_ - before;
            ws.fwd.noalias() += (matrix_exp(ap_, after) * p_) * ws.z;
            ws.bwd.noalias() += (matrix_exp(-aj_, before) * j_) * ws.z;
        }

        u.col(k + 1).noalias() = e_fwd_ * u.col(k);
        u.col(k + 1) += ws.fwd;
        v.col(k) = ws.bwd;
    }
    for (Index k = n - 2; k >= 0; --k)
    {
        ws.tmp.noalias() = e_bwd_ * v.col(k + 1);
        v.col(k) += ws.tmp;
    }
    if (n_c_ < static_cast<std::int64_t>(n))
    {
        Index const nc = static_cast<Index>(n_c_);
        for (Index k = n - 1; k >= nc; --k)
        {
            ws.tmp.noalias() = e_fwd_nc_ * u.col(k - nc);
            u.col(k) -= ws.tmp;
        }
        for (Index k = 0; k + nc < n; ++k)
        {
            ws.tmp.noalias() = e_bwd_nc_ * v.col(k + nc);
            v.col(k) -= ws.tmp;
        }
    }
    out = u - v;
}

void MildOperator::simulate(NoiseRealization const& noise, Vector const& y0,
                            Eigen::Ref<Matrix> out, Workspace& ws) const
{
    Index const n = out.cols();
    check_noise(noise, n, m_);
    if (y0.size() != d_ || out.rows() != d_)
    {
        throw std::invalid_argument("initial state has the wrong dimension");
    }
    if (e_full_.size() == 0)
    {
        throw MatrixExpOverflow("forward propagator overflows at this step");
    }
    constexpr double guard = 1e150;
    Matrix const& a = sys_->generator();
    bool const small = cs_->has_small_jumps();
    bool const large = cs_->has_large_jumps();
    std::size_t next_jump = 0;
    out.col(0) = y0;
    for (Index k = 0; k + 1 < n; ++k)
    {
        double const t = noise.grid.time(k);
        frozen_terms(noise, k, t, out.col(k), ws);
        ws.fwd.noalias() = e_full_ * out.col(k);
        ws.fwd.noalias() += phi_full_ * ws.f;
        ws.fwd.noalias() += e_full_ * ws.gdw;
        while (next_jump < noise.jumps.size()
               && noise.local_step(noise.jumps[next_jump]) <= k)
        {
            JumpEvent const& jump = noise.jumps[next_jump++];
            if (noise.local_step(jump) < k) continue;
            bool const is_small = jump.region == JumpRegion::small;
            if ((is_small && !small) || (!is_small && !large)) continue;
            if (is_small)
                cs_->F_into(t, out.col(k), jump.mark, ws.z);
            else
                cs_->G_into(t, out.col(k), jump.mark, ws.z);
            ws.fwd.noalias() += matrix_exp(a, h_ - jump.offset * h_) * ws.z;
        }
        out.col(k + 1) = ws.fwd;
        double const norm = ws.fwd.norm();
        if (!(norm < guard))
        {
            throw std::overflow_error(
                "forward solution blew up on path "
                + std::to_string(noise.seed_key.path) + " at t = "
                + format_double(noise.grid.time(k + 1)) + " (|Y| = "
                + format_double(norm) + ")");
        }
    }
}

//---------------------------------------------------------------------------//

namespace
{
constexpr std::size_t path_chunk = 16;

void check_window(TimeGrid const& grid, double truncation)
{
    if (std::isfinite(truncation) && grid.t_hi() - grid.t_lo() < 2 * truncation)
    {
        throw std::invalid_argument(
            "noise window too narrow for T_c = " + format_double(truncation)
            + ": need length >= 2 T_c, have "
            + format_double(grid.t_hi() - grid.t_lo()));
    }
}

SReport make_report(DichotomousSystem const& sys, MildOperator const& op,
                    TimeGrid const& grid)
{
    SReport r;
    auto const c = resolve_constants(sys);
    double const tc = static_cast<double>(op.truncation_steps()) * op.step();
    r.tail_factor = std::isfinite(op.truncation()) ? c.k * std::exp(-c.omega * tc) : 0.0;
    r.valid_window = std::isfinite(op.truncation())
                         ? Window{grid.t_lo() + tc, grid.t_hi() - tc}
                         : grid.window();
    r.compensator_method = op.compensator_method();
    return r;
}
}  // namespace

PathEnsemble apply_S(DichotomousSystem const& sys, CoefficientSet const& cs,
                     std::shared_ptr<NoiseSampler const> noise,
                     PathEnsemble const& input, double truncation, SReport* report)
{
    if (!noise) throw std::invalid_argument("apply_S needs a noise sampler");
    if (!(input.grid() == noise->grid()))
    {
        throw std::invalid_argument("input paths are not on the noise grid");
    }
    check_window(noise->grid(), truncation);
    MildOperator const op(sys, cs, noise->spec(), noise->grid().step(), truncation);
    PathEnsemble out(input.grid(), input.paths(), input.dim());
    out.noise = noise;
    parallel_chunks(static_cast<std::size_t>(input.paths()), path_chunk,
                    [&](std::size_t, std::size_t begin, std::size_t end) {
                        auto ws = op.make_workspace(input.nodes());
                        for (std::size_t p = begin; p < end; ++p)
                        {
                            auto const nz = noise->sample(static_cast<std::uint32_t>(p));
                            op.apply(nz, input.path(p), out.path(p), *ws);
                        }
                    });
    if (report) *report = make_report(sys, op, noise->grid());
    return out;
}

PathEnsemble simulate_mild(DichotomousSystem const& sys, CoefficientSet const& cs,
                           std::shared_ptr<NoiseSampler const> noise,
                           Vector const& y_r, Index paths)
{
    if (!noise) throw std::invalid_argument("simulate_mild needs a noise sampler");
    MildOperator const op(sys, cs, noise->spec(), noise->grid().step(),
                          std::numeric_limits<double>::infinity());
    PathEnsemble out(noise->grid(), paths, sys.dim());
    out.noise = noise;
    parallel_chunks(static_cast<std::size_t>(paths), path_chunk,
                    [&](std::size_t, std::size_t begin, std::size_t end) {
                        auto ws = op.make_workspace(out.nodes());
                        for (std::size_t p = begin; p < end; ++p)
                        {
                            auto const nz = noise->sample(static_cast<std::uint32_t>(p));
                            op.simulate(nz, y_r, out.path(p), *ws);
                        }
                    });
    return out;
}

//---------------------------------------------------------------------------//
// Picard
//---------------------------------------------------------------------------//

PicardResult picard_solve(DichotomousSystem const& sys, CoefficientSet const& cs,
                          std::shared_ptr<NoiseSampler const> noise,
                          PicardOptions const& options)
{
    if (!noise) throw std::invalid_argument("picard_solve needs a noise sampler");
    if (options.paths <= 0) throw std::invalid_argument("need at least one path");
    if (options.max_iter <= 0) throw std::invalid_argument("max_iter must be positive");
    if (!(options.tol >= 0)) throw std::invalid_argument("tol must be nonnegative");

    PicardResult result;
    result.constants = resolve_constants(sys);
    result.truncation = options.truncation > 0 ? options.truncation
                                               : 12.0 / result.constants.omega;
    TimeGrid const& grid = noise->grid();
    check_window(grid, result.truncation);

    auto const cond = check_conditions(
        result.constants.declared ? *sys.k() : Real(result.constants.k),
        result.constants.declared ? *sys.omega() : Real(result.constants.omega),
        cs.lipschitz(), noise->diagnostics().b);
    if (!cond.existence)
    {
        result.warnings.push_back("contraction condition fails (lhs "
                                  + cond.lhs.str() + " >= "
                                  + cond.threshold_existence.str()
                                  + "); iterating anyway");
    }

    MildOperator const op(sys, cs, noise->spec(), grid.step(), result.truncation);
    result.s_report = make_report(sys, op, grid);
    result.ensemble = PathEnsemble(grid, options.paths, sys.dim());
    result.ensemble.noise = noise;
    PathEnsemble& ens = result.ensemble;

    Index const nodes = ens.nodes();
    auto const paths = static_cast<std::size_t>(options.paths);
    std::size_t const n_chunks = (paths + path_chunk - 1) / path_chunk;
    std::vector<std::vector<double>> gap_parts(n_chunks);
    std::vector<double> sup_parts(n_chunks);

    for (int it = 0; it < options.max_iter; ++it)
    {
        auto const start = std::chrono::steady_clock::now();
        parallel_chunks(paths, path_chunk, [&](std::size_t c, std::size_t begin,
                                               std::size_t end) {
            auto ws = op.make_workspace(nodes);
            Matrix next(sys.dim(), nodes);
            auto& gap = gap_parts[c];
            gap.assign(static_cast<std::size_t>(nodes), 0.0);
            double sup = 0;
            for (std::size_t p = begin; p < end; ++p)
            {
                auto const nz = noise->sample(static_cast<std::uint32_t>(p));
                auto y = ens.path(static_cast<Index>(p));
                op.apply(nz, y, next, *ws);
                double m = 0;
                for (Index k = 0; k < nodes; ++k)
                {
                    gap[k] += (next.col(k) - y.col(k)).squaredNorm();
                    m = std::max(m, next.col(k).squaredNorm());
                }
                sup += m;
                y = next;
            }
            sup_parts[c] = sup;
        });
        std::vector<double> gap(static_cast<std::size_t>(nodes), 0.0);
        double sup = 0;
        for (std::size_t c = 0; c < n_chunks; ++c)
        {
            for (Index k = 0; k < nodes; ++k) gap[k] += gap_parts[c][k];
            sup += sup_parts[c];
        }
        double const inv = 1.0 / static_cast<double>(paths);
        PicardRecord rec;
        rec.k = it;
        rec.gap = *std::max_element(gap.begin(), gap.end()) * inv;
        rec.sup_second_moment = sup * inv;
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
        if (!std::isfinite(rec.gap) || !std::isfinite(rec.sup_second_moment))
        {
            throw std::overflow_error("Picard iterate is not finite at sweep "
                                      + std::to_string(it));
        }
        result.trace.push_back(rec);
        if (options.on_iteration) options.on_iteration(rec);
        if (rec.gap <= options.tol)
        {
            result.converged = true;
            break;
        }
    }
    return result;
}

void write_gap_trace_jsonl(std::ostream& os, std::vector<PicardRecord> const& trace,
                           bool include_wall)
{
    for (auto const& r : trace)
    {
        nlohmann::ordered_json j;
        j["k"] = r.k;
        j["gap"] = r.gap;
        j["sup_second_moment"] = r.sup_second_moment;
        if (include_wall) j["wall_ms"] = r.wall_ms;
        os << j.dump() << '\n';
    }
}

}  // namespace apsde
