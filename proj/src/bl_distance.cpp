#include "apsde/bl_distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <vector>

#include "apsde/lp.hpp"

namespace apsde
{

EmpiricalLaw::EmpiricalLaw(Matrix points, Vector weights)
    : points_(std::move(points)), weights_(std::move(weights))
{
    if (points_.cols() == 0 || points_.rows() == 0)
    {
        throw std::invalid_argument("empirical law needs at least one point");
    }
    if (weights_.size() != points_.cols())
    {
        throw std::invalid_argument("one weight per point is required");
    }
    if (!points_.allFinite())
    {
        throw std::invalid_argument("empirical law points must be finite");
    }
    if (!weights_.allFinite() || weights_.minCoeff() < 0)
    {
        throw std::invalid_argument("weights must be finite and nonnegative");
    }
    if (std::abs(weights_.sum() - 1.0) > 1e-12)
    {
        throw std::invalid_argument("weights must sum to 1 (got "
                                    + format_double(weights_.sum()) + ")");
    }
}

EmpiricalLaw EmpiricalLaw::uniform(Matrix points)
{
    Index const n = points.cols();
    if (n == 0) throw std::invalid_argument("empirical law needs at least one point");
    return EmpiricalLaw(std::move(points), Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

EmpiricalLaw EmpiricalLaw::point_mass(Vector const& x)
{
    return EmpiricalLaw(Matrix(x), Vector::Ones(1));
}

char const* to_string(BlRoute route)
{
    switch (route)
    {
    case BlRoute::automatic: return "automatic";
    case BlRoute::dense_lp: return "dense_lp";
    case BlRoute::line: return "line";
    case BlRoute::transport: return "transport";
    }
    return "?";
}

namespace
{
//! mu - nu on the union of the supports, coincident atoms merged.
struct SignedMeasure
{
    Matrix points;  // d x n
    std::vector<double> mass;
};

SignedMeasure difference(EmpiricalLaw const& mu, EmpiricalLaw const& nu)
{
    Index const d = mu.dim();
    Index const total = mu.size() + nu.size();
    std::vector<Index> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), Index{0});
    auto point = [&](Index k) {
        return k < mu.size() ? mu.points().col(k) : nu.points().col(k - mu.size());
    };
    auto mass = [&](Index k) {
        return k < mu.size() ? mu.weights()(k) : -nu.weights()(k - mu.size());
    };
    std::sort(order.begin(), order.end(), [&](Index x, Index y) {
        auto px = point(x);
        auto py = point(y);
        for (Index i = 0; i < d; ++i)
        {
            if (px(i) != py(i)) return px(i) < py(i);
        }
        return x < y;
    });
    SignedMeasure out;
    std::vector<Index> keep;
    std::vector<double> masses;
    for (std::size_t k = 0; k < order.size();)
    {
        std::size_t e = k;
        double m = 0;
        // Sum the positive and negative parts separately so that identical
        // atoms cancel exactly.
        double plus = 0, minus = 0;
        while (e < order.size() && point(order[e]) == point(order[k]))
        {
            double const w = mass(order[e]);
            (w >= 0 ? plus : minus) += w;
            ++e;
        }
        m = plus + minus;
        if (m != 0.0)
        {
            keep.push_back(order[k]);
            masses.push_back(m);
        }
        k = e;
    }
    out.points.resize(d, static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) out.points.col(static_cast<Index>(k)) = point(keep[k]);
    // Orient so that the first atom carries positive mass: the distance is
    // symmetric and both argument orders then run the same computation.
    if (!masses.empty() && masses.front() < 0)
        for (auto& v : masses) v = -v;
    out.mass = std::move(masses);
    return out;
}

//---------------------------------------------------------------------------//
// Dense LP over (u, c) with u = f + 1 and s = 1 - c.

BlResult dense_route(SignedMeasure const& sm)
{
    Index const n = sm.points.cols();
    Index const rows = 2 * n + n * (n - 1) + 1;
    Matrix a = Matrix::Zero(rows, n + 1);
    Vector b = Vector::Zero(rows);
    Index r = 0;
    for (Index i = 0; i < n; ++i)
    {
        a(r, i) = 1;  // f_i <= s
        a(r, n) = 1;
        b(r++) = 2;
        a(r, i) = -1;  // -f_i <= s
        a(r, n) = 1;
        b(r++) = 0;
    }
    for (Index i = 0; i < n; ++i)
    {
        for (Index j = 0; j < n; ++j)
        {
            if (i == j) continue;
            a(r, i) = 1;
            a(r, j) = -1;
            a(r, n) = -(sm.points.col(i) - sm.points.col(j)).norm();
            b(r++) = 0;
        }
    }
    a(r, n) = 1;
    b(r++) = 1;
    Vector obj = Vector::Zero(n + 1);
    for (Index i = 0; i < n; ++i) obj(i) = sm.mass[i];
    auto const lp = solve_lp_max(a, b, obj);
    if (!lp.optimal)
    {
        throw std::runtime_error("bounded-Lipschitz LP did not reach an optimum");
    }
    BlResult res;
    res.route = BlRoute::dense_lp;
    res.c = lp.x(n);
    double v = 0;
    for (Index i = 0; i < n; ++i) v += sm.mass[i] * (lp.x(i) - 1.0);
    res.value = std::max(0.0, v);
    res.evaluations = lp.pivots;
    return res;
}

//---------------------------------------------------------------------------//
// One dimension: max sum a_i f_i with |f_i - f_{i+1}| <= c gap_i and
// |f_i| <= s, by slope trick on the concave value function.

struct Breakpoint
{
    double p;
    double w;
};

double line_value(std::vector<double> const& x, std::vector<double> const& a, double c)
{
    double const s = 1.0 - c;
    if (s <= 0 || x.empty()) return 0.0;
    constexpr double big = 1e6;
    auto less_p = [](Breakpoint const& u, Breakpoint const& v) { return u.p < v.p; };
    auto greater_p = [](Breakpoint const& u, Breakpoint const& v) { return u.p > v.p; };
    std::priority_queue<Breakpoint, std::vector<Breakpoint>, decltype(less_p)> left(less_p);
    std::priority_queue<Breakpoint, std::vector<Breakpoint>, decltype(greater_p)> right(greater_p);
    double off_l = 0, off_r = 0;
    left.push({-s, big});
    right.push({s, big});
    double peak = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        if (i > 0)
        {
            double const r = c * (x[i] - x[i - 1]);
            off_l -= r;
            off_r += r;
            left.push({-s - off_l, big});
            right.push({s - off_r, big});
        }
        double const ai = a[i];
        if (ai > 0)
        {
            double rem = ai;
            Breakpoint top = right.top();
            double pos = top.p + off_r;
            peak += ai * pos;
            while (true)
            {
                right.pop();
                if (top.w <= rem)
                {
                    left.push({pos - off_l, top.w});
                    rem -= top.w;
                    top = right.top();
                    double const next = top.p + off_r;
                    peak += rem * (next - pos);
                    pos = next;
                    if (rem == 0) break;
                }
                else
                {
                    left.push({pos - off_l, rem});
                    right.push({top.p, top.w - rem});
                    break;
                }
            }
        }
        else if (ai < 0)
        {
            double rem = -ai;
            Breakpoint top = left.top();
            double pos = top.p + off_l;
            peak += ai * pos;
            while (true)
            {
                left.pop();
                if (top.w <= rem)
                {
                    right.push({pos - off_r, top.w});
                    rem -= top.w;
                    top = left.top();
                    double const next = top.p + off_l;
                    peak += rem * (pos - next);
                    pos = next;
                    if (rem == 0) break;
                }
                else
                {
                    right.push({pos - off_r, rem});
                    left.push({top.p, top.w - rem});
                    break;
                }
            }
        }
    }
    return peak;
}

BlResult line_route(SignedMeasure const& sm)
{
    if (sm.points.rows() != 1)
    {
        throw std::invalid_argument("the line route needs one-dimensional laws");
    }
    std::vector<double> x(sm.mass.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = sm.points(0, static_cast<Index>(i));
    BlResult res;
    res.route = BlRoute::line;
    // The value is concave in c, so golden section brackets the maximum.
    double const g = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0, hi = 1;
    double c1 = hi - g * (hi - lo), c2 = lo + g * (hi - lo);
    double v1 = line_value(x, sm.mass, c1), v2 = line_value(x, sm.mass, c2);
    res.evaluations = 2;
    res.value = std::max(v1, v2);
    res.c = v1 >= v2 ? c1 : c2;
    for (int it = 0; it < 90 && hi - lo > 1e-15; ++it)
    {
        if (v1 >= v2)
        {
            hi = c2;
            c2 = c1;
            v2 = v1;
            c1 = hi - g * (hi - lo);
            v1 = line_value(x, sm.mass, c1);
            if (v1 > res.value) res.value = v1, res.c = c1;
        }
        else
        {
            lo = c1;
            c1 = c2;
            v1 = v2;
            c2 = lo + g * (hi - lo);
            v2 = line_value(x, sm.mass, c2);
            if (v2 > res.value) res.value = v2, res.c = c2;
        }
        ++res.evaluations;
    }
    res.value = std::max(0.0, res.value);
    return res;
}

//---------------------------------------------------------------------------//
// Transport with cost min(c d, 2(1 - c)) by successive shortest paths.

struct TransportProblem
{
    std::vector<double> supply, demand;
    Matrix dist;  // sources x sinks
};

TransportProblem make_transport(SignedMeasure const& sm)
{
    TransportProblem tp;
    std::vector<Index> src, snk;
    for (std::size_t k = 0; k < sm.mass.size(); ++k)
    {
        if (sm.mass[k] > 0)
        {
            src.push_back(static_cast<Index>(k));
            tp.supply.push_back(sm.mass[k]);
        }
        else
        {
            snk.push_back(static_cast<Index>(k));
            tp.demand.push_back(-sm.mass[k]);
        }
    }
    tp.dist.resize(static_cast<Index>(src.size()), static_cast<Index>(snk.size()));
    for (std::size_t i = 0; i < src.size(); ++i)
        for (std::size_t j = 0; j < snk.size(); ++j)
            tp.dist(static_cast<Index>(i), static_cast<Index>(j))
                = (sm.points.col(src[i]) - sm.points.col(snk[j])).norm();
    return tp;
}

struct Cut
{
    double value;
    double intercept;
    double slope;
};

//! Every atom carries the same mass and both sides have equally many atoms:
//! the optimal plan is a permutation.
bool is_assignment(TransportProblem const& tp)
{
    if (tp.supply.size() != tp.demand.size() || tp.supply.empty()) return false;
    double const w = tp.supply.front();
    auto same = [w](double v) { return std::abs(v - w) <= 1e-13 * w; };
    return std::all_of(tp.supply.begin(), tp.supply.end(), same)
           && std::all_of(tp.demand.begin(), tp.demand.end(), same);
}

Cut make_cut(Matrix const& flow, Matrix const& dist, double c)
{
    double const cap = 2.0 * (1.0 - c);
    double direct = 0, hub = 0;
    for (Index j = 0; j < flow.cols(); ++j)
    {
        for (Index i = 0; i < flow.rows(); ++i)
        {
            double const f = flow(i, j);
            if (f <= 0) continue;
            if (c * dist(i, j) <= cap)
                direct += f * dist(i, j);
            else
                hub += f;
        }
    }
    Cut cut;
    cut.intercept = 2 * hub;
    cut.slope = direct - 2 * hub;
    cut.value = cut.intercept + cut.slope * c;
    return cut;
}

//! Shortest augmenting path assignment (Hungarian method with potentials).
Cut assignment_value(TransportProblem const& tp, double c)
{
    Index const n = static_cast<Index>(tp.supply.size());
    double const cap = 2.0 * (1.0 - c);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> cost
        = (c * tp.dist.array()).min(cap).matrix();
    double const inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(u), minv(u);
    std::vector<Index> match(static_cast<std::size_t>(n + 1), 0), way(match);
    std::vector<char> used(static_cast<std::size_t>(n + 1));
    for (Index i = 1; i <= n; ++i)
    {
        match[0] = i;
        Index j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do
        {
            used[j0] = 1;
            Index const i0 = match[j0];
            double delta = inf;
            Index j1 = 0;
            double const* row = cost.data() + (i0 - 1) * n;
            for (Index j = 1; j <= n; ++j)
            {
                if (used[j]) continue;
                double const cur = row[j - 1] - u[i0] - v[j];
                if (cur < minv[j])
                {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta)
                {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (Index j = 0; j <= n; ++j)
            {
                if (used[j])
                {
                    u[match[j]] += delta;
                    v[j] -= delta;
                }
                else
                {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do
        {
            Index const j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    Matrix flow = Matrix::Zero(n, n);
    double const w = tp.supply.front();
    for (Index j = 1; j <= n; ++j) flow(match[j] - 1, j - 1) = w;
    return make_cut(flow, tp.dist, c);
}

Cut transport_value(TransportProblem const& tp, double c)
{
    Index const n = static_cast<Index>(tp.supply.size());
    Index const m = static_cast<Index>(tp.demand.size());
    if (n == 0 || m == 0) return {0, 0, 0};
    if (is_assignment(tp)) return assignment_value(tp, c);
    double const cap = 2.0 * (1.0 - c);
    Matrix cost = (c * tp.dist.array()).min(cap).matrix();
    Matrix flow = Matrix::Zero(n, m);
    std::vector<double> supply = tp.supply, demand = tp.demand;
    Index const v_count = n + m;
    std::vector<double> pot(static_cast<std::size_t>(v_count), 0.0);
    std::vector<double> dist(static_cast<std::size_t>(v_count));
    std::vector<Index> prev(static_cast<std::size_t>(v_count));
    std::vector<char> done(static_cast<std::size_t>(v_count));
    constexpr double tol = 1e-15;
    double const inf = std::numeric_limits<double>::infinity();

    while (true)
    {
        double left = 0, right = 0;
        for (double v : supply) left += v > tol ? v : 0;
        for (double v : demand) right += v > tol ? v : 0;
        if (left <= tol || right <= tol) break;

        std::fill(dist.begin(), dist.end(), inf);
        std::fill(done.begin(), done.end(), 0);
        std::fill(prev.begin(), prev.end(), Index{-1});
        for (Index i = 0; i < n; ++i)
            if (supply[i] > tol) dist[i] = 0;
        Index target = -1;
        while (true)
        {
            Index u = -1;
            double best = inf;
            for (Index v = 0; v < v_count; ++v)
            {
                if (!done[v] && dist[v] < best)
                {
                    best = dist[v];
                    u = v;
                }
            }
            if (u < 0) break;
            done[u] = 1;
            if (u >= n && demand[u - n] > tol)
            {
                target = u;
                break;
            }
            if (u < n)
            {
                for (Index j = 0; j < m; ++j)
                {
                    double const nd = dist[u] + std::max(0.0, cost(u, j) + pot[u] - pot[n + j]);
                    if (nd < dist[n + j])
                    {
                        dist[n + j] = nd;
                        prev[n + j] = u;
                    }
                }
            }
            else
            {
                Index const j = u - n;
                for (Index i = 0; i < n; ++i)
                {
                    if (flow(i, j) <= tol) continue;
                    double const nd = dist[u] + std::max(0.0, -cost(i, j) + pot[u] - pot[i]);
                    if (nd < dist[i])
                    {
                        dist[i] = nd;
                        prev[i] = u;
                    }
                }
            }
        }
        if (target < 0) break;
        double const dt = dist[target];
        for (Index v = 0; v < v_count; ++v) pot[v] += std::min(dist[v], dt);

        // Bottleneck along the path.
        double push = demand[target - n];
        Index v = target;
        while (true)
        {
            Index const u = prev[v];
            if (u < 0)
            {
                push = std::min(push, supply[v]);
                break;
            }
            if (u >= n) push = std::min(push, flow(v, u - n));
            v = u;
        }
        v = target;
        while (true)
        {
            Index const u = prev[v];
            if (u < 0)
            {
                supply[v] -= push;
                break;
            }
            if (u < n)
                flow(u, v - n) += push;
            else
                flow(v, u - n) -= push;
            v = u;
        }
        demand[target - n] -= push;
    }

    return make_cut(flow, tp.dist, c);
}

BlResult transport_route(SignedMeasure const& sm)
{
    auto const tp = make_transport(sm);
    BlResult res;
    res.route = BlRoute::transport;
    std::vector<Cut> cuts;
    auto envelope = [&](double c) {
        double u = std::numeric_limits<double>::infinity();
        for (auto const& k : cuts) u = std::min(u, k.intercept + k.slope * c);
        return u;
    };
    double c = 0.5;
    for (int it = 0; it < 200; ++it)
    {
        Cut const k = transport_value(tp, c);
        ++res.evaluations;
        if (k.value > res.value || it == 0)
        {
            res.value = k.value;
            res.c = c;
        }
        cuts.push_back(k);
        // Maximize the upper envelope over [0, 1]: its maximum sits at an
        // end point or where two cuts cross.
        std::vector<double> cand{0.0, 1.0};
        for (std::size_t p = 0; p < cuts.size(); ++p)
        {
            for (std::size_t q = p + 1; q < cuts.size(); ++q)
            {
                double const ds = cuts[p].slope - cuts[q].slope;
                if (ds == 0) continue;
                double const x = (cuts[q].intercept - cuts[p].intercept) / ds;
                if (x > 0 && x < 1) cand.push_back(x);
            }
        }
        double best_c = 0, best_u = -std::numeric_limits<double>::infinity();
        for (double x : cand)
        {
            double const u = envelope(x);
            if (u > best_u + 1e-15 || (std::abs(u - best_u) <= 1e-15 && x < best_c))
            {
                best_u = u;
                best_c = x;
            }
        }
        if (best_u - res.value <= 1e-13 * std::max(1.0, res.value)) break;
        c = best_c;
    }
    res.value = std::max(0.0, res.value);
    return res;
}
}  // namespace

BlResult bl_distance_detail(EmpiricalLaw const& mu, EmpiricalLaw const& nu,
                            BlOptions const& options)
{
    if (mu.dim() != nu.dim())
    {
        throw std::invalid_argument("laws live in different dimensions");
    }
    if (mu.size() + nu.size() > options.cap)
    {
        throw std::invalid_argument(
            "combined support size " + std::to_string(mu.size() + nu.size())
            + " exceeds the cap of " + std::to_string(options.cap)
            + "; subsample the laws (fewer paths per law) or raise the cap");
    }
    auto const sm = difference(mu, nu);
    if (sm.mass.empty())
    {
        BlResult zero;
        zero.route = options.route;
        return zero;
    }
    BlRoute route = options.route;
    if (route == BlRoute::automatic)
    {
        if (static_cast<Index>(sm.mass.size()) <= options.dense_limit)
            route = BlRoute::dense_lp;
        else if (mu.dim() == 1)
            route = BlRoute::line;
        else
            route = BlRoute::transport;
        // Coordinates constant over both supports drop out of every distance;
        // with one coordinate left the line route is exact.
        if (route == BlRoute::transport)
        {
            Index varying = -1, count = 0;
            for (Index r = 0; r < sm.points.rows(); ++r)
            {
                if (sm.points.row(r).maxCoeff() != sm.points.row(r).minCoeff())
                {
                    varying = r;
                    ++count;
                }
            }
            if (count == 1)
            {
                SignedMeasure line{sm.points.row(varying), sm.mass};
                return line_route(line);
            }
        }
    }
    switch (route)
    {
    case BlRoute::dense_lp: return dense_route(sm);
    case BlRoute::line: return line_route(sm);
    default: return transport_route(sm);
    }
}

double bl_distance(EmpiricalLaw const& mu, EmpiricalLaw const& nu, BlOptions const& options)
{
    return bl_distance_detail(mu, nu, options).value;
}

double bl_fixed_budget(EmpiricalLaw const& mu, EmpiricalLaw const& nu, double c, BlRoute route)
{
    if (mu.dim() != nu.dim())
    {
        throw std::invalid_argument("laws live in different dimensions");
    }
    if (!(c >= 0 && c <= 1))
    {
        throw std::invalid_argument("Lipschitz budget must lie in [0, 1]");
    }
    auto const sm = difference(mu, nu);
    if (sm.mass.empty()) return 0.0;
    if (route == BlRoute::line)
    {
        if (mu.dim() != 1) throw std::invalid_argument("the line route needs one-dimensional laws");
        std::vector<double> x(sm.mass.size());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = sm.points(0, static_cast<Index>(i));
        return line_value(x, sm.mass, c);
    }
    return transport_value(make_transport(sm), c).value;
}

}  // namespace apsde
