#include "gfsim/powerflow.hpp"

#include <Eigen/Dense>

namespace gfsim {

int PowerFlowSolution::index_of(int bus_id) const {
    for (std::size_t i = 0; i < bus_ids.size(); ++i) {
        if (bus_ids[i] == bus_id) return static_cast<int>(i);
    }
    throw std::out_of_range("PowerFlowSolution: no bus " + std::to_string(bus_id));
}

PowerFlowSolution solve_power_flow(const PowerFlowProblem& problem) {
    if (problem.dataset == nullptr) throw std::invalid_argument("power flow: no dataset");
    const NetworkDataset& ds = *problem.dataset;
    const int n = static_cast<int>(ds.buses.size());

    std::map<int, int> idx;
    for (int i = 0; i < n; ++i) idx[ds.buses[i].id] = i;
    if (idx.count(problem.slack_bus) == 0) {
        throw std::invalid_argument("power flow: slack bus not in dataset");
    }

    using Cplx = std::complex<double>;
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
    auto stamp_series = [&](int f, int t, Cplx z) {
        const Cplx a = 1.0 / z;
        y(f, f) += a;
        y(t, t) += a;
        y(f, t) -= a;
        y(t, f) -= a;
    };
    for (const auto& l : ds.lines) {
        const int f = idx.at(l.from);
        const int t = idx.at(l.to);
        stamp_series(f, t, {l.r_pu, l.x_pu});
        y(f, f) += Cplx{0.0, l.b_pu / 2.0};
        y(t, t) += Cplx{0.0, l.b_pu / 2.0};
    }
    for (const auto& tr : ds.transformers) {
        stamp_series(idx.at(tr.from), idx.at(tr.to), {tr.r_pu, tr.x_pu});
    }
    for (const auto& ld : ds.loads) {
        y(idx.at(ld.bus), idx.at(ld.bus)) += problem.load_scale * ld.p / ds.s_base;
    }
    for (const auto& [bus, b] : problem.extra_shunt_b_pu) y(idx.at(bus), idx.at(bus)) += Cplx{0.0, b};
    for (const auto& [bus, g] : problem.extra_shunt_g_pu) y(idx.at(bus), idx.at(bus)) += Cplx{g, 0.0};

    // Bus classification.
    const int slack = idx.at(problem.slack_bus);
    std::vector<bool> is_pv(n, false);
    Eigen::VectorXd p_spec = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd vm = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd va = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        const auto& b = ds.buses[i];
        if (b.generator) {
            is_pv[i] = true;
            vm[i] = b.v_set;
        }
    }
    if (!is_pv[slack]) throw std::invalid_argument("power flow: slack bus must be a generator bus");
    for (const auto& [bus, p] : problem.p_gen_pu) {
        const int i = idx.at(bus);
        if (!is_pv[i]) throw std::invalid_argument("power flow: dispatch at non-generator bus");
        p_spec[i] = p;
    }

    // Unknowns: angles for all buses but slack, magnitudes for PQ buses.
    std::vector<int> ang_vars, mag_vars;
    for (int i = 0; i < n; ++i) {
        if (i != slack) ang_vars.push_back(i);
        if (!is_pv[i]) mag_vars.push_back(i);
    }
    const int n_ang = static_cast<int>(ang_vars.size());
    const int n_mag = static_cast<int>(mag_vars.size());
    const int n_var = n_ang + n_mag;

    auto calc_pq = [&](Eigen::VectorXd& p, Eigen::VectorXd& q) {
        p.setZero(n);
        q.setZero(n);
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < n; ++k) {
                const double g = y(i, k).real();
                const double b = y(i, k).imag();
                const double th = va[i] - va[k];
                p[i] += vm[i] * vm[k] * (g * std::cos(th) + b * std::sin(th));
                q[i] += vm[i] * vm[k] * (g * std::sin(th) - b * std::cos(th));
            }
        }
    };

    Eigen::VectorXd p(n), q(n);
    double residual = 0.0;
    int iter = 0;
    for (; iter < problem.max_iterations; ++iter) {
        calc_pq(p, q);
        Eigen::VectorXd f(n_var);
        for (int a = 0; a < n_ang; ++a) f[a] = p_spec[ang_vars[a]] - p[ang_vars[a]];
        for (int m = 0; m < n_mag; ++m) f[n_ang + m] = 0.0 - q[mag_vars[m]];
        residual = f.lpNorm<Eigen::Infinity>();
        if (residual < problem.tolerance) break;

        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n_var, n_var);
        auto dp_dtheta = [&](int i, int k) {
            if (i == k) return -q[i] - y(i, i).imag() * vm[i] * vm[i];
            const double th = va[i] - va[k];
            return vm[i] * vm[k] * (y(i, k).real() * std::sin(th) - y(i, k).imag() * std::cos(th));
        };
        auto dq_dtheta = [&](int i, int k) {
            if (i == k) return p[i] - y(i, i).real() * vm[i] * vm[i];
            const double th = va[i] - va[k];
            return -vm[i] * vm[k] * (y(i, k).real() * std::cos(th) + y(i, k).imag() * std::sin(th));
        };
        auto dp_dv = [&](int i, int k) {
            if (i == k) return p[i] / vm[i] + y(i, i).real() * vm[i];
            const double th = va[i] - va[k];
            return vm[i] * (y(i, k).real() * std::cos(th) + y(i, k).imag() * std::sin(th));
        };
        auto dq_dv = [&](int i, int k) {
            if (i == k) return q[i] / vm[i] - y(i, i).imag() * vm[i];
            const double th = va[i] - va[k];
            return vm[i] * (y(i, k).real() * std::sin(th) - y(i, k).imag() * std::cos(th));
        };
        for (int a = 0; a < n_ang; ++a) {
            for (int a2 = 0; a2 < n_ang; ++a2) jac(a, a2) = dp_dtheta(ang_vars[a], ang_vars[a2]);
            for (int m = 0; m < n_mag; ++m) jac(a, n_ang + m) = dp_dv(ang_vars[a], mag_vars[m]);
        }
        for (int m = 0; m < n_mag; ++m) {
            for (int a2 = 0; a2 < n_ang; ++a2) {
                jac(n_ang + m, a2) = dq_dtheta(mag_vars[m], ang_vars[a2]);
            }
            for (int m2 = 0; m2 < n_mag; ++m2) {
                jac(n_ang + m, n_ang + m2) = dq_dv(mag_vars[m], mag_vars[m2]);
            }
        }
        const Eigen::VectorXd dx = jac.partialPivLu().solve(f);
        for (int a = 0; a < n_ang; ++a) va[ang_vars[a]] += dx[a];
        for (int m = 0; m < n_mag; ++m) vm[mag_vars[m]] += dx[n_ang + m];
    }
    if (residual >= problem.tolerance) {
        throw std::runtime_error("power flow did not converge; residual " +
                                 std::to_string(residual));
    }

    PowerFlowSolution sol;
    sol.iterations = iter;
    sol.residual = residual;
    sol.bus_ids.resize(n);
    sol.v.resize(n);
    for (int i = 0; i < n; ++i) {
        sol.bus_ids[i] = ds.buses[i].id;
        sol.v[i] = std::polar(vm[i], va[i]);
    }
    sol.i_injection.resize(n);
    sol.s_injection.resize(n);
    Eigen::VectorXcd vvec(n);
    for (int i = 0; i < n; ++i) vvec[i] = sol.v[i];
    const Eigen::VectorXcd ivec = y * vvec;
    for (int i = 0; i < n; ++i) {
        sol.i_injection[i] = ivec[i];
        sol.s_injection[i] = sol.v[i] * std::conj(ivec[i]);
    }
    return sol;
}

} // namespace gfsim
