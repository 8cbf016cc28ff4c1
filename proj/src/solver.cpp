#include "relaxflow/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace relaxflow {

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::iteration_limit: return "iteration-limit";
        case SolveStatus::numerical_failure: return "numerical-failure";
    }
    return "unknown";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using SparseRow = std::vector<std::pair<int, double>>;

struct SparseMat {
    int rows = 0;
    int cols = 0;
    std::vector<SparseRow> row;

    void resize(int r, int c) {
        rows = r;
        cols = c;
        row.assign(r, {});
    }
    VectorXd multiply(const VectorXd& x) const {
        VectorXd out = VectorXd::Zero(rows);
        for (int i = 0; i < rows; ++i)
            for (const auto& [j, v] : row[i]) out(i) += v * x(j);
        return out;
    }
    VectorXd multiply_transpose(const VectorXd& y) const {
        VectorXd out = VectorXd::Zero(cols);
        for (int i = 0; i < rows; ++i)
            for (const auto& [j, v] : row[i]) out(j) += v * y(i);
        return out;
    }
};

/// Cone layout of the slack vector: n_lp nonnegative coordinates followed
/// by second-order blocks of the listed dimensions.
struct ConeDims {
    int n_lp = 0;
    std::vector<int> soc;
    int total() const {
        int t = n_lp;
        for (int d : soc) t += d;
        return t;
    }
    int degree() const { return n_lp + static_cast<int>(soc.size()); }
};

/// Standard-form data: min c'x  s.t.  A x = b,  G x + s = h,  s in K.
struct StdForm {
    int n = 0;
    SparseMat A, G;
    VectorXd b, h, c;
    ConeDims dims;
    VectorXd col_scale;        // x_original = x_scaled / col_scale
    bool trivially_infeasible = false;
    std::string infeasible_reason;
};

SparseRow merge_terms(const std::vector<std::pair<int, double>>& terms) {
    std::map<int, double> acc;
    for (const auto& [c, v] : terms) acc[c] += v;
    SparseRow out;
    for (const auto& [c, v] : acc)
        if (v != 0.0) out.push_back({c, v});
    return out;
}

StdForm build_std_form(const ConeProgram& p) {
    StdForm f;
    f.n = p.n_vars;

    std::vector<SparseRow> arows;
    std::vector<double> bvals;
    for (const auto& row : p.equalities) {
        SparseRow r;
        for (std::size_t k = 0; k < row.cols.size(); ++k)
            if (row.vals[k] != 0.0) r.push_back({row.cols[k], row.vals[k]});
        if (r.empty()) {
            if (std::abs(row.rhs) > 1e-12) {
                f.trivially_infeasible = true;
                f.infeasible_reason = "empty equality row with nonzero rhs: " + row.label;
            }
            continue;
        }
        arows.push_back(std::move(r));
        bvals.push_back(row.rhs);
    }
    for (int i = 0; i < p.n_vars; ++i) {
        if (p.lower[i] == p.upper[i] && p.lower[i] > -kInf) {
            arows.push_back({{i, 1.0}});
            bvals.push_back(p.lower[i]);
        }
    }

    std::vector<SparseRow> grows;
    std::vector<double> hvals;
    auto push_lp = [&](SparseRow r, double rhs) {
        if (r.empty()) {
            if (rhs < -1e-12) {
                f.trivially_infeasible = true;
                f.infeasible_reason = "empty inequality row with negative rhs";
            }
            return;
        }
        grows.push_back(std::move(r));
        hvals.push_back(rhs);
    };
    for (const auto& row : p.inequalities) {
        SparseRow r;
        for (std::size_t k = 0; k < row.cols.size(); ++k)
            if (row.vals[k] != 0.0) r.push_back({row.cols[k], row.vals[k]});
        push_lp(std::move(r), row.rhs);
    }
    for (int i = 0; i < p.n_vars; ++i) {
        if (p.lower[i] == p.upper[i] && p.lower[i] > -kInf) continue;  // handled as equality
        if (p.upper[i] < kInf) push_lp({{i, 1.0}}, p.upper[i]);
        if (p.lower[i] > -kInf) push_lp({{i, -1.0}}, -p.lower[i]);
    }
    f.dims.n_lp = static_cast<int>(grows.size());

    // Rotated cones in the standard embedding:
    //   s = (x_a + x_b, 2u, x_a - x_b) lies in a second-order cone.
    for (const auto& blk : p.rsoc_blocks) {
        grows.push_back(merge_terms({{blk.a, -1.0}, {blk.b, -1.0}}));
        hvals.push_back(0.0);
        for (int uc : blk.u) {
            grows.push_back({{uc, -2.0}});
            hvals.push_back(0.0);
        }
        grows.push_back(merge_terms({{blk.a, -1.0}, {blk.b, 1.0}}));
        hvals.push_back(0.0);
        f.dims.soc.push_back(static_cast<int>(blk.u.size()) + 2);
    }
    for (const auto& blk : p.soc_blocks) {
        grows.push_back({{blk.t, -1.0}});
        hvals.push_back(0.0);
        for (int uc : blk.u) {
            grows.push_back({{uc, -1.0}});
            hvals.push_back(0.0);
        }
        f.dims.soc.push_back(static_cast<int>(blk.u.size()) + 1);
    }

    f.A.resize(static_cast<int>(arows.size()), f.n);
    f.A.row = std::move(arows);
    f.G.resize(static_cast<int>(grows.size()), f.n);
    f.G.row = std::move(grows);
    f.b = Eigen::Map<VectorXd>(bvals.data(), static_cast<int>(bvals.size()));
    f.h = Eigen::Map<VectorXd>(hvals.data(), static_cast<int>(hvals.size()));
    f.c = VectorXd::Zero(f.n);
    for (int i = 0; i < f.n; ++i) f.c(i) = p.objective[i];
    f.col_scale = VectorXd::Ones(f.n);
    return f;
}

/// Ruiz equilibration; cone rows share one scale per block so the cone
/// geometry is preserved.
void equilibrate(StdForm& f, int sweeps) {
    const int p = f.A.rows, m = f.G.rows, n = f.n;
    VectorXd da_acc = VectorXd::Ones(p), dg_acc = VectorXd::Ones(m), e_acc = VectorXd::Ones(n);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        VectorXd ra = VectorXd::Zero(p), rg = VectorXd::Zero(m), ce = VectorXd::Zero(n);
        for (int i = 0; i < p; ++i)
            for (auto& [j, v] : f.A.row[i]) {
                ra(i) = std::max(ra(i), std::abs(v));
                ce(j) = std::max(ce(j), std::abs(v));
            }
        for (int i = 0; i < m; ++i)
            for (auto& [j, v] : f.G.row[i]) {
                rg(i) = std::max(rg(i), std::abs(v));
                ce(j) = std::max(ce(j), std::abs(v));
            }
        // Cone blocks: one uniform scale (the block max).
        int off = f.dims.n_lp;
        for (int d : f.dims.soc) {
            const double blk = rg.segment(off, d).maxCoeff();
            rg.segment(off, d).setConstant(blk);
            off += d;
        }
        auto root = [](double v) { return v > 0.0 ? std::sqrt(v) : 1.0; };
        for (int i = 0; i < p; ++i) ra(i) = root(ra(i));
        for (int i = 0; i < m; ++i) rg(i) = root(rg(i));
        for (int j = 0; j < n; ++j) ce(j) = root(ce(j));
        for (int i = 0; i < p; ++i)
            for (auto& [j, v] : f.A.row[i]) v /= ra(i) * ce(j);
        for (int i = 0; i < m; ++i)
            for (auto& [j, v] : f.G.row[i]) v /= rg(i) * ce(j);
        da_acc = da_acc.cwiseProduct(ra);
        dg_acc = dg_acc.cwiseProduct(rg);
        e_acc = e_acc.cwiseProduct(ce);
    }
    for (int i = 0; i < p; ++i) f.b(i) /= da_acc(i);
    for (int i = 0; i < m; ++i) f.h(i) /= dg_acc(i);
    for (int j = 0; j < n; ++j) f.c(j) /= e_acc(j);
    f.col_scale = e_acc;
}

// --- Cone algebra over the layout (n_lp, soc dims) ---------------------------

struct Scaling {
    // LP block: w2 = s/z; lambda = sqrt(s z).
    VectorXd lp_w2;
    // Per SOC block: eta^2 and the unit scaling point w_bar.
    std::vector<double> eta2;
    std::vector<VectorXd> wbar;
    VectorXd lambda;
};

double jres(const Eigen::Ref<const VectorXd>& u) {
    return u(0) * u(0) - u.tail(u.size() - 1).squaredNorm();
}

/// H(w) v = 2 w (w'v) - J v for the unit-J scaling point w.
VectorXd apply_h(const VectorXd& w, const Eigen::Ref<const VectorXd>& v) {
    VectorXd out = 2.0 * w * w.dot(v);
    out(0) -= v(0);
    out.tail(v.size() - 1) += v.tail(v.size() - 1);
    return out;
}

/// H(w)^{-1} v = 2 (Jw)(Jw)'v - J v.
VectorXd apply_h_inv(const VectorXd& w, const Eigen::Ref<const VectorXd>& v) {
    VectorXd jw = -w;
    jw(0) = w(0);
    VectorXd out = 2.0 * jw * jw.dot(v);
    out(0) -= v(0);
    out.tail(v.size() - 1) += v.tail(v.size() - 1);
    return out;
}

struct ConeOps {
    const ConeDims& dims;

    explicit ConeOps(const ConeDims& d) : dims(d) {}

    template <typename F>
    void per_block(VectorXd& v, F&& fn) const {
        int off = dims.n_lp;
        for (std::size_t k = 0; k < dims.soc.size(); ++k) {
            fn(k, v.segment(off, dims.soc[k]));
            off += dims.soc[k];
        }
    }

    VectorXd identity() const {
        VectorXd e = VectorXd::Zero(dims.total());
        e.head(dims.n_lp).setOnes();
        int off = dims.n_lp;
        for (int d : dims.soc) {
            e(off) = 1.0;
            off += d;
        }
        return e;
    }

    /// Largest cone-infeasibility of r; s = r + (1+alpha) e if r is outside.
    VectorXd bring_to_cone(const VectorXd& r) const {
        double alpha = -1.0;
        for (int i = 0; i < dims.n_lp; ++i) alpha = std::max(alpha, -r(i));
        int off = dims.n_lp;
        for (int d : dims.soc) {
            const double margin = r(off) - r.segment(off + 1, d - 1).norm();
            alpha = std::max(alpha, -margin);
            off += d;
        }
        VectorXd s = r;
        if (alpha >= -0.5) {  // add slack also for barely-interior points
            const double shift = 1.0 + alpha;
            s.head(dims.n_lp).array() += shift;
            off = dims.n_lp;
            for (int d : dims.soc) {
                s(off) += shift;
                off += d;
            }
        }
        return s;
    }

    bool update_scaling(const VectorXd& s, const VectorXd& z, Scaling& w) const {
        w.lp_w2.resize(dims.n_lp);
        for (int i = 0; i < dims.n_lp; ++i) {
            if (s(i) <= 0.0 || z(i) <= 0.0) return false;
            w.lp_w2(i) = s(i) / z(i);
        }
        w.eta2.assign(dims.soc.size(), 1.0);
        w.wbar.assign(dims.soc.size(), VectorXd());
        int off = dims.n_lp;
        for (std::size_t k = 0; k < dims.soc.size(); ++k) {
            const int d = dims.soc[k];
            const auto sb = s.segment(off, d);
            const auto zb = z.segment(off, d);
            const double sres = jres(sb), zres = jres(zb);
            if (sres <= 0.0 || zres <= 0.0 || sb(0) <= 0.0 || zb(0) <= 0.0) return false;
            const double rho_s = std::sqrt(sres), rho_z = std::sqrt(zres);
            const VectorXd sbar = sb / rho_s;
            const VectorXd zbar = zb / rho_z;
            const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
            VectorXd jz = -zbar;
            jz(0) = zbar(0);
            // Scaling point, then the unit-J Householder vector that maps the
            // cone's identity onto it: v = (wbar + e) / sqrt(2 (wbar0 + 1)).
            VectorXd point = (sbar + jz) / (2.0 * gamma);
            point(0) += 1.0;
            w.wbar[k] = point / std::sqrt(2.0 * point(0));
            w.eta2[k] = rho_s / rho_z;
            off += d;
        }
        w.lambda = apply_w(w, z);
        return w.lambda.allFinite();
    }

    VectorXd apply_w(const Scaling& w, const VectorXd& v) const {
        VectorXd out = v;
        out.head(dims.n_lp) =
            w.lp_w2.cwiseSqrt().cwiseProduct(v.head(dims.n_lp));
        int off = dims.n_lp;
        for (std::size_t k = 0; k < dims.soc.size(); ++k) {
            const int d = dims.soc[k];
            out.segment(off, d) = std::sqrt(w.eta2[k]) * apply_h(w.wbar[k], v.segment(off, d));
            off += d;
        }
        return out;
    }

    VectorXd apply_w_inv(const Scaling& w, const VectorXd& v) const {
        VectorXd out = v;
        out.head(dims.n_lp) =
            v.head(dims.n_lp).cwiseQuotient(w.lp_w2.cwiseSqrt());
        int off = dims.n_lp;
        for (std::size_t k = 0; k < dims.soc.size(); ++k) {
            const int d = dims.soc[k];
            out.segment(off, d) =
                apply_h_inv(w.wbar[k], v.segment(off, d)) / std::sqrt(w.eta2[k]);
            off += d;
        }
        return out;
    }

    /// M v = W'W v.
    VectorXd apply_m(const Scaling& w, const VectorXd& v) const {
        VectorXd out = v;
        out.head(dims.n_lp) = w.lp_w2.cwiseProduct(v.head(dims.n_lp));
        int off = dims.n_lp;
        for (std::size_t k = 0; k < dims.soc.size(); ++k) {
            const int d = dims.soc[k];
            out.segment(off, d) =
                w.eta2[k] * apply_h(w.wbar[k], apply_h(w.wbar[k], v.segment(off, d)));
            off += d;
        }
        return out;
    }

    VectorXd apply_m_inv(const Scaling& w, const VectorXd& v) const {
        VectorXd out = v;
        out.head(dims.n_lp) = v.head(dims.n_lp).cwiseQuotient(w.lp_w2);
        int off = dims.n_lp;
        for (std::size_t k = 0; k < dims.soc.size(); ++k) {
            const int d = dims.soc[k];
            out.segment(off, d) =
                apply_h_inv(w.wbar[k], apply_h_inv(w.wbar[k], v.segment(off, d))) / w.eta2[k];
            off += d;
        }
        return out;
    }

    /// Jordan product u o v.
    VectorXd product(const VectorXd& u, const VectorXd& v) const {
        VectorXd out(dims.total());
        out.head(dims.n_lp) = u.head(dims.n_lp).cwiseProduct(v.head(dims.n_lp));
        int off = dims.n_lp;
        for (int d : dims.soc) {
            out(off) = u.segment(off, d).dot(v.segment(off, d));
            out.segment(off + 1, d - 1) =
                u(off) * v.segment(off + 1, d - 1) + v(off) * u.segment(off + 1, d - 1);
            off += d;
        }
        return out;
    }

    /// Jordan division u \ v (solves u o out = v).
    VectorXd divide(const VectorXd& u, const VectorXd& v) const {
        VectorXd out(dims.total());
        out.head(dims.n_lp) = v.head(dims.n_lp).cwiseQuotient(u.head(dims.n_lp));
        int off = dims.n_lp;
        for (int d : dims.soc) {
            const auto u1 = u.segment(off + 1, d - 1);
            const auto v1 = v.segment(off + 1, d - 1);
            const double det = u(off) * u(off) - u1.squaredNorm();
            const double out0 = (u(off) * v(off) - u1.dot(v1)) / det;
            out(off) = out0;
            out.segment(off + 1, d - 1) = (v1 - out0 * u1) / u(off);
            off += d;
        }
        return out;
    }

    /// Largest step alpha with u + alpha d staying in the cone (u interior).
    double max_step(const VectorXd& u, const VectorXd& d) const {
        double alpha = kInf;
        for (int i = 0; i < dims.n_lp; ++i)
            if (d(i) < 0.0) alpha = std::min(alpha, -u(i) / d(i));
        int off = dims.n_lp;
        for (int dim : dims.soc) {
            const auto u1 = u.segment(off + 1, dim - 1);
            const auto d1 = d.segment(off + 1, dim - 1);
            const double qa = d(off) * d(off) - d1.squaredNorm();
            const double qb = u(off) * d(off) - u1.dot(d1);
            const double qc = u(off) * u(off) - u1.squaredNorm();
            // f(a) = qa a^2 + 2 qb a + qc, f(0) = qc > 0; first positive root,
            // written in cancellation-free forms.
            double root = kInf;
            const double disc = qb * qb - qa * qc;
            if (qa < 0.0) {
                const double sq = std::sqrt(std::max(disc, 0.0));
                root = qb <= 0.0 ? qc / (-qb + sq) : (qb + sq) / (-qa);
            } else if (qb < 0.0 && disc >= 0.0) {
                root = qc / (-qb + std::sqrt(disc));
            }
            if (root >= 0.0) alpha = std::min(alpha, root);
            off += dim;
        }
        return alpha;
    }
};

// --- KKT solver: dense normal equations with static regularization -----------

class KktSolver {
public:
    KktSolver(const StdForm& f, const ConeOps& ops) : f_(f), ops_(ops) {}

    bool verbose = false;

    bool factor(const Scaling& w) {
        scaling_ = &w;
        const int n = f_.n, p = f_.A.rows;
        MatrixXd N = MatrixXd::Zero(n, n);
        // LP rows: rank-one updates g g' / w2.
        for (int i = 0; i < f_.dims.n_lp; ++i) {
            const double inv = 1.0 / w.lp_w2(i);
            for (const auto& [cj, vj] : f_.G.row[i])
                for (const auto& [ck, vk] : f_.G.row[i]) N(cj, ck) += inv * vj * vk;
        }
        // SOC blocks: local dense congruence with M^{-1}.
        int off = f_.dims.n_lp;
        for (std::size_t k = 0; k < f_.dims.soc.size(); ++k) {
            const int d = f_.dims.soc[k];
            std::vector<int> cols;
            for (int r = 0; r < d; ++r)
                for (const auto& [cj, _] : f_.G.row[off + r]) cols.push_back(cj);
            std::sort(cols.begin(), cols.end());
            cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
            const int nc = static_cast<int>(cols.size());
            if (nc == 0) {
                off += d;
                continue;
            }
            MatrixXd local = MatrixXd::Zero(d, nc);
            for (int r = 0; r < d; ++r)
                for (const auto& [cj, vj] : f_.G.row[off + r]) {
                    const int lc = static_cast<int>(
                        std::lower_bound(cols.begin(), cols.end(), cj) - cols.begin());
                    local(r, lc) += vj;
                }
            MatrixXd minv(d, d);
            for (int r = 0; r < d; ++r) {
                VectorXd e = VectorXd::Zero(d);
                e(r) = 1.0;
                minv.col(r) = apply_h_inv(w.wbar[k], apply_h_inv(w.wbar[k], e)) / w.eta2[k];
            }
            const MatrixXd contrib = local.transpose() * minv * local;
            for (int a = 0; a < nc; ++a)
                for (int bcol = 0; bcol < nc; ++bcol) N(cols[a], cols[bcol]) += contrib(a, bcol);
            off += d;
        }
        // Static regularization on equilibrated data; iterative refinement
        // removes its effect from the returned directions. Escalate when a
        // pivot goes negative on very ill-conditioned late iterates.
        for (delta_ = 1e-10; delta_ <= 1e-2; delta_ *= 1e3) {
            MatrixXd Nreg = N;
            Nreg.diagonal().array() += delta_;
            llt_n_.compute(Nreg);
            if (llt_n_.info() != Eigen::Success) {
                if (verbose)
                    std::fprintf(stderr,
                                 "      factor: N llt failed at delta %.1e (diag %.2e..%.2e "
                                 "finite=%d)\n",
                                 delta_, N.diagonal().minCoeff(), N.diagonal().maxCoeff(),
                                 int(N.allFinite()));
                continue;
            }
            if (p == 0) return true;
            MatrixXd At = MatrixXd::Zero(n, p);
            for (int i = 0; i < p; ++i)
                for (const auto& [j, v] : f_.A.row[i]) At(j, i) = v;
            nia_ = llt_n_.solve(At);
            MatrixXd S = MatrixXd::Zero(p, p);
            for (int i = 0; i < p; ++i)
                for (const auto& [j, v] : f_.A.row[i]) S.row(i) += v * nia_.row(j);
            S.diagonal().array() += delta_;
            llt_s_.compute(S);
            if (llt_s_.info() == Eigen::Success) return true;
            if (verbose)
                std::fprintf(stderr,
                             "      factor: S llt failed at delta %.1e (N diag %.2e..%.2e finite=%d, "
                             "S diag %.2e..%.2e finite=%d)\n",
                             delta_, N.diagonal().minCoeff(), N.diagonal().maxCoeff(),
                             int(N.allFinite()), S.diagonal().minCoeff(), S.diagonal().maxCoeff(),
                             int(S.allFinite()));
        }
        return false;
    }

    /// Solves [0 A' G'; A 0 0; G 0 -M] (dx,dy,dz) = (bx,by,bz).
    void solve(const VectorXd& bx, const VectorXd& by, const VectorXd& bz, VectorXd& dx,
               VectorXd& dy, VectorXd& dz, int refine_steps) const {
        solve_once(bx, by, bz, dx, dy, dz);
        const double rhs_norm = std::max({bx.lpNorm<Eigen::Infinity>(),
                                          by.size() ? by.lpNorm<Eigen::Infinity>() : 0.0,
                                          bz.lpNorm<Eigen::Infinity>(), 1.0});
        double prev_err = kInf;
        for (int pass = 0; pass < refine_steps; ++pass) {
            const VectorXd ex =
                bx - (f_.A.multiply_transpose(dy) + f_.G.multiply_transpose(dz));
            const VectorXd ey = by - f_.A.multiply(dx);
            const VectorXd ez = bz - (f_.G.multiply(dx) - ops_.apply_m(*scaling_, dz));
            const double err = std::max({ex.lpNorm<Eigen::Infinity>(),
                                         ey.size() ? ey.lpNorm<Eigen::Infinity>() : 0.0,
                                         ez.lpNorm<Eigen::Infinity>()});
            if (err < 1e-14 * rhs_norm || err >= prev_err) break;
            prev_err = err;
            VectorXd cx, cy, cz;
            solve_once(ex, ey, ez, cx, cy, cz);
            dx += cx;
            dy += cy;
            dz += cz;
        }
    }

private:
    void solve_once(const VectorXd& bx, const VectorXd& by, const VectorXd& bz, VectorXd& dx,
                    VectorXd& dy, VectorXd& dz) const {
        const VectorXd w = bx + f_.G.multiply_transpose(ops_.apply_m_inv(*scaling_, bz));
        if (f_.A.rows > 0) {
            const VectorXd rhs_y = f_.A.multiply(llt_n_.solve(w)) - by;
            dy = llt_s_.solve(rhs_y);
            dx = llt_n_.solve(w - f_.A.multiply_transpose(dy));
        } else {
            dy.resize(0);
            dx = llt_n_.solve(w);
        }
        dz = ops_.apply_m_inv(*scaling_, f_.G.multiply(dx) - bz);
    }

    const StdForm& f_;
    const ConeOps& ops_;
    const Scaling* scaling_ = nullptr;
    Eigen::LLT<MatrixXd> llt_n_;
    Eigen::LLT<MatrixXd> llt_s_;
    MatrixXd nia_;
    double delta_ = 0.0;
};

struct Residuals {
    VectorXd rx, ry, rz;
    double rt = 0.0;
    double cx = 0.0, by = 0.0, hz = 0.0;
};

}  // namespace

Solution solve(const ConeProgram& program, const SolveOptions& opts) {
    program.check_well_formed();
    Solution sol;

    StdForm f = build_std_form(program);
    if (f.trivially_infeasible) {
        sol.status = SolveStatus::infeasible;
        sol.x.assign(program.n_vars, 0.0);
        return sol;
    }
    if (f.n == 0) {
        sol.status = SolveStatus::optimal;
        sol.objective = sol.dual_objective = program.objective_constant;
        return sol;
    }
    equilibrate(f, opts.equilibrate_sweeps);

    const int n = f.n, p = f.A.rows, m = f.G.rows;
    ConeOps ops(f.dims);
    KktSolver kkt(f, ops);
    kkt.verbose = opts.verbose;

    // Descale, measure against the original program and fill report fields.
    auto finalize_point = [&](const VectorXd& xs, double tau) {
        sol.x.assign(n, 0.0);
        for (int j = 0; j < n; ++j) sol.x[j] = xs(j) / (f.col_scale(j) * tau);
        sol.objective = program.objective_constant;
        for (int j = 0; j < n; ++j) sol.objective += program.objective[j] * sol.x[j];
        double eq = 0.0, ineq = 0.0, cone = 0.0;
        const VerifyReport rep = check_point(program, sol.x, opts.tol);
        std::size_t idx = 0;
        for (std::size_t r = 0; r < program.equalities.size(); ++r, ++idx)
            eq = std::max(eq, std::abs(rep.entries[idx].residual) / rep.entries[idx].scale);
        for (; idx < rep.entries.size() - program.rsoc_blocks.size() - program.soc_blocks.size();
             ++idx)
            ineq = std::max(ineq, rep.entries[idx].residual / rep.entries[idx].scale);
        for (; idx < rep.entries.size(); ++idx)
            cone = std::max(cone, rep.entries[idx].residual / rep.entries[idx].scale);
        sol.max_eq_residual = eq;
        sol.max_ineq_violation = std::max(0.0, ineq);
        sol.max_cone_violation = std::max(0.0, cone);
        return rep.pass;
    };

    if (m == 0) {
        // No conic part: nothing to interior-point over. Solve the equality
        // system in a least-squares sense and classify directly.
        Eigen::MatrixXd Ad = MatrixXd::Zero(p, n);
        for (int i = 0; i < p; ++i)
            for (const auto& [j, v] : f.A.row[i]) Ad(i, j) = v;
        const VectorXd xs = Ad.colPivHouseholderQr().solve(f.b);
        if ((Ad * xs - f.b).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + f.b.lpNorm<Eigen::Infinity>())) {
            sol.status = SolveStatus::infeasible;
            sol.x.assign(program.n_vars, 0.0);
            return sol;
        }
        // Any objective component in the nullspace of A makes it unbounded.
        const VectorXd cn = f.c - Ad.transpose() * Ad.transpose().colPivHouseholderQr().solve(f.c);
        if (cn.lpNorm<Eigen::Infinity>() > 1e-10) {
            sol.status = SolveStatus::unbounded;
            finalize_point(xs, 1.0);
            return sol;
        }
        finalize_point(xs, 1.0);
        sol.status = SolveStatus::optimal;
        sol.dual_objective = sol.objective;
        return sol;
    }

    // Initialization at the identity scaling.
    Scaling w;
    w.lp_w2 = VectorXd::Ones(f.dims.n_lp);
    w.eta2.assign(f.dims.soc.size(), 1.0);
    w.wbar.assign(f.dims.soc.size(), VectorXd());
    for (std::size_t k = 0; k < f.dims.soc.size(); ++k) {
        VectorXd wb = VectorXd::Zero(f.dims.soc[k]);
        wb(0) = 1.0;
        w.wbar[k] = wb;
    }
    w.lambda = ops.identity();
    if (!kkt.factor(w)) {
        sol.status = SolveStatus::numerical_failure;
        sol.x.assign(program.n_vars, 0.0);
        return sol;
    }

    VectorXd x, y, z, s, x1, y1, z1, x2, y2, z2;
    kkt.solve(VectorXd::Zero(n), f.b, f.h, x1, y1, z1, opts.refine_steps);
    x = x1;
    s = ops.bring_to_cone(-z1);
    kkt.solve(-f.c, VectorXd::Zero(p), VectorXd::Zero(m), x2, y2, z2, opts.refine_steps);
    y = y2;
    z = ops.bring_to_cone(z2);
    double tau = 1.0, kappa = 1.0;

    const double resx0 = std::max(1.0, f.c.norm());
    const double resy0 = std::max(1.0, f.b.norm());
    const double resz0 = std::max(1.0, f.h.norm());
    const int degree = f.dims.degree();

    double inner_tol = std::min(opts.tol * 0.5, 1e-8);
    Residuals res;
    auto compute_residuals = [&]() {
        res.rx = -f.A.multiply_transpose(y) - f.G.multiply_transpose(z) - tau * f.c;
        res.ry = f.A.multiply(x) - tau * f.b;
        res.rz = s + f.G.multiply(x) - tau * f.h;
        res.cx = f.c.dot(x);
        res.by = p > 0 ? f.b.dot(y) : 0.0;
        res.hz = f.h.dot(z);
        res.rt = kappa + res.cx + res.by + res.hz;
    };

    sol.status = SolveStatus::iteration_limit;
    for (int iter = 0; iter <= opts.max_iter; ++iter) {
        compute_residuals();
        const double nx = x.norm(), ny = y.norm(), nz = z.norm(), ns = s.norm();
        const double pres = std::max(p > 0 ? res.ry.norm() / std::max(1.0, resy0 + nx) : 0.0,
                                     res.rz.norm() / std::max(1.0, resz0 + nx + ns)) /
                            tau;
        const double dres = res.rx.norm() / std::max(1.0, resx0 + ny + nz) / tau;
        const double gap_point = s.dot(z) / (tau * tau);
        const double pcost = res.cx / tau;
        const double dcost = -(res.by + res.hz) / tau;
        const double relgap = gap_point / std::max({1.0, std::abs(pcost), std::abs(dcost)});
        sol.iterations = iter;

        if (opts.verbose)
            std::fprintf(stderr, "it %2d pres %.2e dres %.2e gap %.2e tau %.2e kap %.2e\n", iter,
                         pres, dres, gap_point, tau, kappa);

        if (pres < inner_tol && dres < inner_tol &&
            (gap_point < inner_tol || relgap < inner_tol)) {
            if (finalize_point(x, tau)) {
                sol.status = SolveStatus::optimal;
                sol.dual_objective = dcost + program.objective_constant;
                sol.duality_gap = gap_point;
                return sol;
            }
            if (opts.verbose) {
                const VerifyReport rep = check_point(program, sol.x, opts.tol);
                const ConstraintResidual* worst = rep.worst_entry();
                std::fprintf(stderr, "      point check failed: %s residual %.3e\n",
                             worst ? worst->label.c_str() : "?", worst ? worst->residual : 0.0);
            }
            inner_tol *= 0.01;  // passed the scaled test but not the original-space one
            if (inner_tol < 1e-13) break;
        }

        // Certificate-based exits via the self-dual ray.
        const double hresx = (res.rx + tau * f.c).norm();  // ||A'y + G'z||
        if (res.by + res.hz < -1e-10 && tau < kappa) {
            const double pinf = hresx / std::max(1.0, -(res.by + res.hz));
            if (pinf < opts.tol * 1e-2 || (pinf < opts.tol && tau < 1e-8 * std::max(1.0, kappa))) {
                sol.status = SolveStatus::infeasible;
                finalize_point(x, std::max(tau, 1e-30));
                return sol;
            }
        }
        if (res.cx < -1e-10 && tau < kappa) {
            const double hresy = p > 0 ? (res.ry + tau * f.b).norm() : 0.0;  // ||A x||
            const double dinf =
                std::max(hresy, (f.G.multiply(x) + s).norm()) / std::max(1.0, -res.cx);
            if (dinf < opts.tol * 1e-2 || (dinf < opts.tol && tau < 1e-8 * std::max(1.0, kappa))) {
                sol.status = SolveStatus::unbounded;
                finalize_point(x, std::max(-res.cx, 1e-30));
                sol.objective = -kInf;
                return sol;
            }
        }
        if (iter == opts.max_iter) break;

        const double mu = (s.dot(z) + tau * kappa) / (degree + 1);
        if (!ops.update_scaling(s, z, w)) {
            if (opts.verbose) std::fprintf(stderr, "      scaling breakdown\n");
            sol.status = SolveStatus::numerical_failure;
            break;
        }
        if (!kkt.factor(w)) {
            if (opts.verbose) std::fprintf(stderr, "      factorization breakdown\n");
            sol.status = SolveStatus::numerical_failure;
            break;
        }

        kkt.solve(-f.c, f.b, f.h, x1, y1, z1, opts.refine_steps);
        const double dtau_denom =
            kappa / tau - (f.c.dot(x1) + (p > 0 ? f.b.dot(y1) : 0.0) + f.h.dot(z1));

        // Affine (predictor) direction.
        kkt.solve(res.rx, -res.ry, s - res.rz, x2, y2, z2, opts.refine_steps);
        const double dtau_aff =
            (res.rt - kappa + f.c.dot(x2) + (p > 0 ? f.b.dot(y2) : 0.0) + f.h.dot(z2)) /
            dtau_denom;
        VectorXd dz_aff = z2 + dtau_aff * z1;
        const VectorXd w_dz_aff = ops.apply_w(w, dz_aff);
        const VectorXd ds_by_w_aff = -w_dz_aff - w.lambda;
        const double dkap_aff = -kappa - (kappa / tau) * dtau_aff;

        double alpha_aff = ops.max_step(w.lambda, ds_by_w_aff);
        alpha_aff = std::min(alpha_aff, ops.max_step(w.lambda, w_dz_aff));
        if (dtau_aff < 0.0) alpha_aff = std::min(alpha_aff, -tau / dtau_aff);
        if (dkap_aff < 0.0) alpha_aff = std::min(alpha_aff, -kappa / dkap_aff);
        alpha_aff = std::min(alpha_aff, 1.0);

        const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 1e-8, 1.0 - 1e-8);
        const double one_minus_sigma = 1.0 - sigma;

        // Combined (corrector) direction with the Mehrotra term.
        VectorXd ds_rhs = ops.product(w.lambda, w.lambda);
        ds_rhs += ops.product(ds_by_w_aff, w_dz_aff);
        ds_rhs.head(f.dims.n_lp).array() -= sigma * mu;
        {
            int off = f.dims.n_lp;
            for (int d : f.dims.soc) {
                ds_rhs(off) -= sigma * mu;
                off += d;
            }
        }
        const VectorXd lam_div = ops.divide(w.lambda, ds_rhs);
        const VectorXd bz_comb = -one_minus_sigma * res.rz + ops.apply_w(w, lam_div);
        const double bkap = kappa * tau + dkap_aff * dtau_aff - sigma * mu;

        kkt.solve(one_minus_sigma * res.rx, -one_minus_sigma * res.ry, bz_comb, x2, y2, z2,
                  opts.refine_steps);
        const double dtau = (one_minus_sigma * res.rt - bkap / tau + f.c.dot(x2) +
                             (p > 0 ? f.b.dot(y2) : 0.0) + f.h.dot(z2)) /
                            dtau_denom;
        VectorXd dx = x2 + dtau * x1;
        VectorXd dy = p > 0 ? VectorXd(y2 + dtau * y1) : VectorXd();
        VectorXd dz = z2 + dtau * z1;
        const VectorXd w_dz = ops.apply_w(w, dz);
        const VectorXd ds_by_w = -(lam_div + w_dz);
        const VectorXd ds = ops.apply_w(w, ds_by_w);
        const double dkap = -(bkap + kappa * dtau) / tau;

        const double a_s = ops.max_step(w.lambda, ds_by_w);
        const double a_z = ops.max_step(w.lambda, w_dz);
        const double a_t = dtau < 0.0 ? -tau / dtau : kInf;
        const double a_k = dkap < 0.0 ? -kappa / dkap : kInf;
        double alpha = std::min(std::min(a_s, a_z), std::min(a_t, a_k));
        alpha = std::min(0.99 * alpha, 1.0);
        if (!std::isfinite(alpha) || alpha <= 0.0) {
            if (opts.verbose)
                std::fprintf(stderr, "      step breakdown: a_s %.3e a_z %.3e a_t %.3e a_k %.3e\n",
                             a_s, a_z, a_t, a_k);
            sol.status = SolveStatus::numerical_failure;
            break;
        }

        if (opts.verbose)
            std::fprintf(stderr, "      sigma %.3e alpha_aff %.3e alpha %.3e denom %.3e\n", sigma,
                         alpha_aff, alpha, dtau_denom);

        x += alpha * dx;
        if (p > 0) y += alpha * dy;
        z += alpha * dz;
        s += alpha * ds;
        tau += alpha * dtau;
        kappa += alpha * dkap;
        if (!x.allFinite() || !z.allFinite() || !s.allFinite() || !std::isfinite(tau) ||
            tau <= 0.0) {
            if (opts.verbose)
                std::fprintf(stderr, "      non-finite iterate: tau %.3e dtau %.3e dkap %.3e\n",
                             tau, dtau, dkap);
            sol.status = SolveStatus::numerical_failure;
            break;
        }
    }

    finalize_point(x, std::max(tau, 1e-30));
    sol.duality_gap = s.dot(z) / std::max(tau * tau, 1e-60);
    sol.dual_objective = -(res.by + res.hz) / std::max(tau, 1e-30) + program.objective_constant;
    return sol;
}

}  // namespace relaxflow
