#include "attn/msc.hpp"
#include "attn/synthetic.hpp"

#include <gtest/gtest.h>

using namespace attn;

namespace {

MscProblem random_problem(Rng& rng, std::size_t n, std::vector<Eigen::Index> rows) {
    MscProblem p;
    std::normal_distribution<double> g;
    for (auto r : rows) {
        Matrix x(r, static_cast<Eigen::Index>(n));
        for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = g(rng);
        p.views.push_back(x);
    }
    p.n_clusters = 2;
    p.reshape_dims = choose_reshape_dims(n, 2);
    return p;
}

Matrix randn(Rng& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> g;
    Matrix m(r, c);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = g(rng);
    return m;
}

AdmmState random_state(Rng& rng, const MscProblem& p) {
    MscConfig cfg;
    AdmmState st = AdmmState::initial(p, cfg);
    const auto n = static_cast<Eigen::Index>(p.n_samples());
    for (std::size_t v = 0; v < p.n_views(); ++v) {
        st.z[v] = randn(rng, n, n);
        st.e[v] = randn(rng, p.views[v].rows(), n);
        st.y[v] = randn(rng, p.views[v].rows(), n);
        detail::set_frontal(st.s, v, randn(rng, n, n));
        detail::set_frontal(st.w, v, randn(rng, n, n));
    }
    std::uniform_real_distribution<double> u(0.1, 10.0);
    st.mu = u(rng);
    st.rho = u(rng);
    return st;
}

double l21(const Matrix& m) {
    double s = 0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) s += m.col(c).norm();
    return s;
}

} // namespace

TEST(Msc, ReshapeDims) {
    EXPECT_EQ(choose_reshape_dims(165, 15), (ReshapeDims{11, 15, 11, 15}));
    EXPECT_EQ(choose_reshape_dims(1474, 10), (ReshapeDims{22, 67, 22, 67}));
    EXPECT_EQ(choose_reshape_dims(40, 4), (ReshapeDims{10, 4, 10, 4}));
    EXPECT_EQ(choose_reshape_dims(7, 3), (ReshapeDims{1, 7, 1, 7}));
}

TEST(Msc, ZUpdateWithZeroData) {
    Rng rng(1);
    MscProblem p = random_problem(rng, 6, {3});
    p.views[0].setZero();
    AdmmState st = random_state(rng, p);
    const Matrix z = update_z(st, p, 0);
    const Matrix want = detail::frontal(st.s, 0) - detail::frontal(st.w, 0) / st.rho;
    EXPECT_LE((z - want).cwiseAbs().maxCoeff(), 1e-12);
}

// Property: the Z update zeroes the gradient of the augmented Lagrangian in Z_v.
TEST(Msc, ZUpdateIsStationary) {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const MscProblem p = random_problem(rng, 6, {4, 5});
        const AdmmState st = random_state(rng, p);
        for (std::size_t v = 0; v < p.n_views(); ++v) {
            const Matrix z = update_z(st, p, v);
            const Matrix& x = p.views[v];
            const Matrix grad = -x.transpose() * st.y[v] - st.mu * x.transpose() * (x - x * z - st.e[v]) +
                                detail::frontal(st.w, v) + st.rho * (z - detail::frontal(st.s, v));
            EXPECT_LE(grad.cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, st.mu * x.squaredNorm()));
        }
    }
}

TEST(Msc, L21ShrinkExample) {
    Matrix d(2, 2);
    d << 3, 0.3, 4, 0.4;
    const Matrix e = l21_shrink(d, 1.0);
    EXPECT_NEAR(e(0, 0), 2.4, 1e-15);
    EXPECT_NEAR(e(1, 0), 3.2, 1e-15);
    EXPECT_EQ(e(0, 1), 0.0);
    EXPECT_EQ(e(1, 1), 0.0);
}

TEST(Msc, EUpdateSplitsStackedViews) {
    // X = 0 so D = Y/mu; tau = lambda/mu = 1.
    MscProblem p;
    p.views = {Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
    p.n_clusters = 1;
    p.reshape_dims = {1, 1, 1, 1};
    MscConfig cfg;
    AdmmState st = AdmmState::initial(p, cfg);
    st.mu = 2.0;
    st.y[0](0, 0) = 6.0;
    st.y[1](0, 0) = 8.0;
    const auto e = update_e(st, p, 2.0);
    EXPECT_NEAR(e[0](0, 0), 2.4, 1e-15);
    EXPECT_NEAR(e[1](0, 0), 3.2, 1e-15);
}

// Property: l21_shrink is the proximal map; random perturbations never
// lower tau*||E||_{2,1} + 0.5*||E - D||^2.
TEST(Msc, L21ShrinkIsProximal) {
    Rng rng(3);
    std::uniform_real_distribution<double> u(0.05, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix d = randn(rng, 4, 5);
        const double tau = u(rng);
        const Matrix e = l21_shrink(d, tau);
        const auto obj = [&](const Matrix& m) { return tau * l21(m) + 0.5 * (m - d).squaredNorm(); };
        const double best = obj(e);
        for (int k = 0; k < 20; ++k) EXPECT_GE(obj(e + 1e-3 * randn(rng, 4, 5)), best - 1e-12);
    }
}

TEST(Msc, MultiplierAndPenaltyUpdates) {
    Rng rng(4);
    const MscProblem p = random_problem(rng, 4, {3});
    AdmmState st = random_state(rng, p);
    MscConfig cfg;
    cfg.mu_max = st.mu * 1.5;
    const AdmmState before = st;
    update_multipliers(st, p, cfg);
    const Matrix& x = p.views[0];
    EXPECT_LE((st.y[0] - (before.y[0] + before.mu * (x - x * before.z[0] - before.e[0]))).norm(), 1e-12);
    const Matrix dw = detail::frontal(st.w, 0) - detail::frontal(before.w, 0);
    EXPECT_LE((dw - before.rho * (before.z[0] - detail::frontal(before.s, 0))).norm(), 1e-12);
    EXPECT_DOUBLE_EQ(st.mu, cfg.mu_max);
    EXPECT_DOUBLE_EQ(st.rho, std::min(cfg.eta * before.rho, cfg.rho_max));
}

TEST(Msc, Residuals) {
    MscProblem p;
    p.views = {Matrix::Identity(2, 2)};
    p.n_clusters = 1;
    p.reshape_dims = {1, 2, 1, 2};
    MscConfig cfg;
    AdmmState st = AdmmState::initial(p, cfg);
    st.z[0] << 0.5, 0, 0, 1;
    detail::set_frontal(st.s, 0, Matrix::Constant(2, 2, 0.25));
    const Residuals r = residuals(st, p);
    EXPECT_DOUBLE_EQ(r.reconstruction, 0.5);
    EXPECT_DOUBLE_EQ(r.match, 0.75);
}

TEST(Msc, AffinityIsSymmetricAverage) {
    Rng rng(5);
    const std::vector<Matrix> z = {randn(rng, 5, 5), randn(rng, 5, 5)};
    const Matrix m = build_affinity(z);
    EXPECT_LE((m - m.transpose()).norm(), 1e-15);
    EXPECT_GE(m.minCoeff(), 0.0);
    const Matrix want = (z[0].cwiseAbs() + z[0].cwiseAbs().transpose() + z[1].cwiseAbs() + z[1].cwiseAbs().transpose()) / 2.0;
    EXPECT_LE((m - want).norm(), 1e-13);
}

TEST(Msc, StackingRoundTrip) {
    Rng rng(6);
    const std::vector<Matrix> z = {randn(rng, 3, 3), randn(rng, 3, 3)};
    const DenseTensor t = detail::stack_frontal(z);
    EXPECT_EQ(t.shape(), (Shape{3, 3, 2}));
    EXPECT_EQ(detail::frontal(t, 1), z[1]);
    EXPECT_EQ(t.at({2, 1, 1}), z[1](2, 1));
}

TEST(Msc, ZeroTargetGivesZeroS) {
    Rng rng(7);
    const MscProblem p = random_problem(rng, 4, {3});
    MscConfig cfg;
    AdmmState st = AdmmState::initial(p, cfg);
    detail::set_frontal(st.s, 0, Matrix::Ones(4, 4));
    (void)update_s(st, p, cfg);
    EXPECT_EQ(frobenius_norm(st.s), 0.0);
}

TEST(Msc, ExactSStepConverges) {
    MultiViewSpec spec;
    spec.k = 3;
    spec.per_cluster = 6;
    const MultiViewDataset ds = gen_synthetic_multiview(spec);
    MscProblem p{ds.views, ds.k, choose_reshape_dims(ds.n_samples(), ds.k)};
    MscConfig cfg;
    cfg.s_step = SStep::exact;
    const MscResult r = solve(p, cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_LT(r.iterations, cfg.iter_max);
    EXPECT_LE(r.trace.back().match_error, cfg.tol);
}

TEST(Msc, TopologyRefreshSchedule) {
    MultiViewSpec spec;
    spec.k = 2;
    spec.per_cluster = 4;
    spec.views = 2;
    spec.feature_dim = 10;
    spec.subspace_dim = 2;
    const MultiViewDataset ds = gen_synthetic_multiview(spec);
    MscProblem p{ds.views, ds.k, choose_reshape_dims(ds.n_samples(), ds.k)};
    MscConfig cfg;
    cfg.iter_max = 12;
    cfg.tol = 1e-300;
    const MscResult r = solve(p, cfg);
    ASSERT_EQ(r.trace.size(), 12u);
    for (const auto& it : r.trace) {
        EXPECT_EQ(it.s_info.full_search, (it.iteration - 1) % cfg.topology_refresh_interval == 0)
            << "iteration " << it.iteration;
        if (!it.s_info.full_search) EXPECT_LE(it.s_info.sweeps, cfg.refit_sweeps);
    }
}

TEST(Msc, ValidatesProblem) {
    MscProblem p;
    p.views = {Matrix::Zero(2, 4), Matrix::Zero(3, 5)};
    p.reshape_dims = {2, 2, 2, 2};
    try {
        p.validate();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::shape_inconsistency);
    }
}
