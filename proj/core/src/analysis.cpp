#include "gfsim/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

namespace gfsim {

void TwoConverterParams::validate() const {
    auto side_ok = [](const Side& s, const char* which) {
        if (!(s.c_dc > 0.0) || s.g_dc < 0.0 || !(s.kappa_dc > 0.0) || !(s.v_dc_ref > 0.0) ||
            !(s.mu > 0.0) || !(s.gamma_ac >= 0.0)) {
            throw std::invalid_argument(std::string("TwoConverterParams: invalid ") + which);
        }
    };
    side_ok(side_1, "side_1");
    side_ok(side_2, "side_2");
    if (!(r > 0.0)) throw std::invalid_argument("TwoConverterParams: r must be > 0");
}

Vec2 line_current(const TwoConverterState& s, const TwoConverterParams& p) {
    // Frame aligned with theta_2 = 0, theta_1 = delta.
    const Vec2 m1 = p.side_1.mu * unit_vector(s.delta);
    const Vec2 m2 = p.side_2.mu * unit_vector(0.0);
    return (s.v_dc_1 * m1 - s.v_dc_2 * m2) / p.r;
}

TwoConverterState two_converter_rhs(const TwoConverterState& s, const TwoConverterParams& p) {
    const auto& a = p.side_1;
    const auto& b = p.side_2;
    const double cos_d = std::cos(s.delta);
    const double coupling = a.mu * b.mu * cos_d / p.r;

    TwoConverterState d;
    d.v_dc_1 = -(a.kappa_dc * (s.v_dc_1 - a.v_dc_ref) +
                 (a.g_dc + a.mu * a.mu / p.r) * s.v_dc_1 - coupling * s.v_dc_2) /
               a.c_dc;
    d.v_dc_2 = -(b.kappa_dc * (s.v_dc_2 - b.v_dc_ref) +
                 (b.g_dc + b.mu * b.mu / p.r) * s.v_dc_2 - coupling * s.v_dc_1) /
               b.c_dc;
    d.delta = a.gamma_dc * (s.v_dc_1 - a.v_dc_ref) - b.gamma_dc * (s.v_dc_2 - b.v_dc_ref) -
              (a.gamma_ac + b.gamma_ac) * std::sin(0.5 * (s.delta - p.delta_r));
    return d;
}

double energy(const TwoConverterState& s, const TwoConverterParams& p) {
    const double dv1 = s.v_dc_1 - p.side_1.v_dc_ref;
    const double dv2 = s.v_dc_2 - p.side_2.v_dc_ref;
    return 0.5 * (p.side_1.c_dc * dv1 * dv1 + p.side_2.c_dc * dv2 * dv2) +
           2.0 * (1.0 - std::cos(0.5 * (s.delta - p.delta_r)));
}

double reference_equilibrium_residual(const TwoConverterParams& p) {
    const TwoConverterState ref{p.side_1.v_dc_ref, p.side_2.v_dc_ref, p.delta_r};
    const TwoConverterState d = two_converter_rhs(ref, p);
    return std::max({std::abs(d.v_dc_1), std::abs(d.v_dc_2), std::abs(d.delta)});
}

std::vector<TwoConverterState> default_ic_grid(const TwoConverterParams& p) {
    std::vector<TwoConverterState> grid;
    const double angles[] = {-2.5, -1.0, -0.1, 0.1, 1.0, 2.5};
    const double dc_fracs[] = {0.0, -0.05, 0.05};
    for (const double a : angles) {
        for (const double f : dc_fracs) {
            TwoConverterState s;
            s.delta = p.delta_r + a;
            s.v_dc_1 = p.side_1.v_dc_ref * (1.0 + f);
            s.v_dc_2 = p.side_2.v_dc_ref * (1.0 - f);
            grid.push_back(s);
        }
    }
    return grid;
}

namespace {

GridPointResult run_point(const TwoConverterState& ic, const TwoConverterParams& p,
                          const CertifyConfig& cfg) {
    GridPointResult res;
    res.initial = ic;
    TwoConverterState s = ic;
    double v_prev = energy(s, p);
    res.v_min = v_prev;
    res.v_max = v_prev;
    res.final_error = std::numeric_limits<double>::infinity();

    const auto n_steps = static_cast<long>(std::llround(cfg.horizon / cfg.step_h));
    const double h = cfg.step_h;
    auto step = [&](TwoConverterState& x) {
        const TwoConverterState k1 = two_converter_rhs(x, p);
        TwoConverterState t;
        t.v_dc_1 = x.v_dc_1 + 0.5 * h * k1.v_dc_1;
        t.v_dc_2 = x.v_dc_2 + 0.5 * h * k1.v_dc_2;
        t.delta = x.delta + 0.5 * h * k1.delta;
        const TwoConverterState k2 = two_converter_rhs(t, p);
        t.v_dc_1 = x.v_dc_1 + 0.5 * h * k2.v_dc_1;
        t.v_dc_2 = x.v_dc_2 + 0.5 * h * k2.v_dc_2;
        t.delta = x.delta + 0.5 * h * k2.delta;
        const TwoConverterState k3 = two_converter_rhs(t, p);
        t.v_dc_1 = x.v_dc_1 + h * k3.v_dc_1;
        t.v_dc_2 = x.v_dc_2 + h * k3.v_dc_2;
        t.delta = x.delta + h * k3.delta;
        const TwoConverterState k4 = two_converter_rhs(t, p);
        x.v_dc_1 += (h / 6.0) * (k1.v_dc_1 + 2.0 * k2.v_dc_1 + 2.0 * k3.v_dc_1 + k4.v_dc_1);
        x.v_dc_2 += (h / 6.0) * (k1.v_dc_2 + 2.0 * k2.v_dc_2 + 2.0 * k3.v_dc_2 + k4.v_dc_2);
        x.delta += (h / 6.0) * (k1.delta + 2.0 * k2.delta + 2.0 * k3.delta + k4.delta);
    };

    for (long k = 0; k < n_steps; ++k) {
        step(s);
        if (!std::isfinite(s.v_dc_1) || !std::isfinite(s.v_dc_2) || !std::isfinite(s.delta)) {
            res.finite = false;
            res.monotone = false;
            res.converged = false;
            return res;
        }
        const double v = energy(s, p);
        res.v_min = std::min(res.v_min, v);
        res.v_max = std::max(res.v_max, v);
        const double allowed = cfg.uptick_tolerance * (1.0 + v_prev);
        const double uptick = v - v_prev - allowed;
        if (uptick > 0.0) {
            res.monotone = false;
            res.max_uptick = std::max(res.max_uptick, uptick);
        }
        v_prev = v;
    }
    const double e1 = s.v_dc_1 - p.side_1.v_dc_ref;
    const double e2 = s.v_dc_2 - p.side_2.v_dc_ref;
    const double e3 = wrap_angle(s.delta - p.delta_r);
    res.final_error = std::sqrt(e1 * e1 + e2 * e2 + e3 * e3);
    res.converged = res.final_error < cfg.convergence_norm;
    return res;
}

} // namespace

CertificationReport certify(const TwoConverterParams& p,
                            const std::vector<TwoConverterState>& ic_grid,
                            const CertifyConfig& cfg) {
    if (ic_grid.empty()) throw std::invalid_argument("certify: empty initial-condition grid");
    p.validate();

    CertificationReport report;
    report.points.resize(ic_grid.size());
    report.reference_residual = reference_equilibrium_residual(p);

    const unsigned n_workers =
        std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()), 8u);
    std::vector<std::future<void>> tasks;
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < n_workers; ++w) {
        tasks.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i = next.fetch_add(1); i < ic_grid.size(); i = next.fetch_add(1)) {
                report.points[i] = run_point(ic_grid[i], p, cfg);
            }
        }));
    }
    for (auto& t : tasks) t.get();

    std::size_t monotone = 0;
    std::size_t converged = 0;
    for (const auto& pt : report.points) {
        if (pt.monotone) ++monotone;
        if (pt.converged) ++converged;
        report.max_energy_uptick = std::max(report.max_energy_uptick, pt.max_uptick);
    }
    report.monotone_fraction = static_cast<double>(monotone) / static_cast<double>(ic_grid.size());
    report.converged_fraction =
        static_cast<double>(converged) / static_cast<double>(ic_grid.size());
    return report;
}

namespace {

bool passes(const TwoConverterParams& p, const std::vector<TwoConverterState>& grid,
            const CertifyConfig& cfg) {
    return certify(p, grid, cfg).certified();
}

TwoConverterParams with_gamma_sum(const TwoConverterParams& base, double gamma_sum) {
    TwoConverterParams p = base;
    const double base_sum = base.side_1.gamma_ac + base.side_2.gamma_ac;
    const double w1 = base_sum > 0.0 ? base.side_1.gamma_ac / base_sum : 0.5;
    p.side_1.gamma_ac = gamma_sum * w1;
    p.side_2.gamma_ac = gamma_sum * (1.0 - w1);
    return p;
}

TwoConverterParams with_kappa(const TwoConverterParams& base, double kappa) {
    TwoConverterParams p = base;
    p.side_1.kappa_dc = kappa;
    p.side_2.kappa_dc = kappa;
    return p;
}

/// Bisect the smallest passing value of a monotone pass predicate.
template <typename Predicate>
std::optional<double> bisect_threshold(double lo, double hi, double rel_precision,
                                       Predicate&& pass) {
    if (pass(lo)) return lo;
    if (!pass(hi)) return std::nullopt;
    while ((hi - lo) / hi > rel_precision) {
        const double mid = std::sqrt(lo * hi);  // geometric: gains span decades
        if (pass(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

} // namespace

ThresholdEstimate estimate_gain_thresholds(const TwoConverterParams& params_template,
                                           const std::vector<TwoConverterState>& ic_grid,
                                           const CertifyConfig& cfg,
                                           const ThresholdSearchConfig& search) {
    if (ic_grid.empty()) {
        throw std::invalid_argument("estimate_gain_thresholds: empty initial-condition grid");
    }
    ThresholdEstimate est;
    est.gamma_ac_min = bisect_threshold(
        search.gamma_lo, search.gamma_hi, search.relative_precision,
        [&](double g) { return passes(with_gamma_sum(params_template, g), ic_grid, cfg); });
    est.kappa_dc_min = bisect_threshold(
        search.kappa_lo, search.kappa_hi, search.relative_precision,
        [&](double k) { return passes(with_kappa(params_template, k), ic_grid, cfg); });
    return est;
}

} // namespace gfsim
