#include "mcgp/gp_core.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace mcgp;

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

Dataset make_data(const Matrix& x, const Vector& y)
{
    Dataset d;
    d.inputs = x;
    d.values = y;
    return d;
}

Matrix col(std::initializer_list<double> v)
{
    Matrix m(static_cast<Eigen::Index>(v.size()), 1);
    Eigen::Index i = 0;
    for (double x : v)
        m(i++, 0) = x;
    return m;
}

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        out[i++] = x;
    return out;
}

DerivativeSet derivs(const Matrix& pts, int dim = 0)
{
    DerivativeSet s;
    s.points = pts;
    s.specs.assign(static_cast<std::size_t>(pts.rows()), DerivSpec::partial(dim));
    return s;
}

const KernelParams unit = KernelParams::isotropic(1.0, 1.0, 1);

} // namespace

TEST_CASE("posterior_value one-point conditioning")
{
    const GpModel model(unit, make_data(col({0.0}), vec({1.0})));
    const GaussianPrediction p = posterior_value(model, col({1.0}));
    CHECK(p.mean[0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-7));
    CHECK(p.cov(0, 0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-7));
}

TEST_CASE("posterior_value interpolates and handles empty requests")
{
    const Matrix t = col({-2.0, -0.5, 1.0, 2.5});
    const Vector f = vec({0.3, -1.0, 0.8, 2.0});
    const GpModel model(unit, make_data(t, f), 0.25);
    const GaussianPrediction p = posterior_value(model, t);
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
        CHECK(p.mean[i] == doctest::Approx(f[i]).epsilon(1e-6));
        CHECK(p.variance()[i] <= 1e-6);
        CHECK(p.cov(i, i) >= -1e-8);
    }
    const GaussianPrediction e = posterior_value(model, Matrix(0, 1));
    CHECK(e.mean.size() == 0);
    CHECK(e.cov.rows() == 0);
    CHECK(e.cov.cols() == 0);
}

TEST_CASE("stored factor reproduces the jittered covariance")
{
    RngStream rng(4);
    Matrix t(15, 2);
    for (Eigen::Index i = 0; i < t.rows(); ++i)
        t.row(i) << 4 * rng.uniform() - 2, 4 * rng.uniform() - 2;
    const KernelParams p(1.7, vec({0.8, 1.3}));
    const GpModel model(p, make_data(t, testutil::normals(15, rng)));
    Matrix K = cov_values(t, t, p);
    K.diagonal().array() += model.jitter();
    const Matrix L = model.chol().lower();
    CHECK((L * L.transpose() - K).norm() / K.norm() <= 1e-10);
}

TEST_CASE("predict_values_from_derivs examples")
{
    const DerivativeSet s = derivs(col({0.0}));
    const GaussianPrediction zero = predict_values_from_derivs(unit, 0.0, s, vec({0.0}), col({1.0, 2.0}));
    CHECK(zero.mean.cwiseAbs().maxCoeff() == 0.0);

    const GaussianPrediction same = predict_values_from_derivs(unit, 0.0, s, vec({3.0}), col({0.0}));
    CHECK(same.mean[0] == doctest::Approx(0.0));
    CHECK(same.cov(0, 0) == doctest::Approx(1.0));

    const GaussianPrediction one = predict_values_from_derivs(unit, 0.0, s, vec({1.0}), col({1.0}));
    CHECK(one.mean[0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-7));
}

TEST_CASE("predict_enhanced reduces to its degenerate cases")
{
    RngStream rng(9);
    const Matrix t = col({-1.5, 0.2, 1.1});
    const Vector f = vec({-0.4, 0.5, 0.9});
    const Matrix u = col({-2.0, -0.3, 0.6, 1.8});
    const GpModel model(KernelParams::isotropic(1.3, 0.9, 1), make_data(t, f), 0.1);

    const DerivativeSet none = derivs(Matrix(0, 1));
    const GaussianPrediction a = predict_enhanced(model, none, Vector(0), u);
    const GaussianPrediction b = posterior_value(model, u);
    CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((a.cov - b.cov).cwiseAbs().maxCoeff() <= 1e-12);

    const DerivativeSet s = derivs(col({-1.0, 0.5}));
    const Vector fp = vec({0.7, 1.2});
    const EnhancedConditioner only_s(model.params(), 0.1, Matrix(0, 1), s, u);
    const GaussianPrediction c = predict_values_from_derivs(model.params(), 0.1, s, fp, u);
    CHECK((only_s.mean(Vector(0), fp) - c.mean).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((only_s.cov() - c.cov).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("predict_enhanced matches dense joint-Gaussian conditioning")
{
    SUBCASE("hand instance")
    {
        const GpModel model(unit, make_data(col({0.0}), vec({0.0})));
        const DerivativeSet s = derivs(col({2.0}));
        const GaussianPrediction p = predict_enhanced(model, s, vec({1.0}), col({1.0}));
        const auto ref = oracle::condition(col({0.0, 2.0}), {DerivSpec::value(), DerivSpec::partial(0)},
                                           vec({0.0, 1.0}), col({1.0}), unit, 0.0, kRelativeJitter);
        CHECK(std::abs(p.mean[0] - ref.mean[0]) <= 1e-10);
        CHECK(std::abs(p.cov(0, 0) - ref.cov(0, 0)) <= 1e-10);
    }
    SUBCASE("random instances")
    {
        RngStream rng(21);
        for (int trial = 0; trial < 40; ++trial) {
            const int d = 1 + static_cast<int>(rng.below(2));
            const int n = 1 + static_cast<int>(rng.below(6));
            const int m = 1 + static_cast<int>(rng.below(6));
            Vector ls(d);
            for (int j = 0; j < d; ++j)
                ls[j] = 0.5 + rng.uniform();
            const KernelParams p(0.5 + rng.uniform(), ls);
            auto pts = [&](int k) {
                Matrix x(k, d);
                for (int i = 0; i < k; ++i)
                    for (int j = 0; j < d; ++j)
                        x(i, j) = -4.0 + 1.6 * static_cast<double>(i) + 0.4 * rng.uniform();
                return x;
            };
            const Matrix t = pts(n);
            const Vector f = testutil::normals(n, rng);
            DerivativeSet s;
            s.points = pts(m);
            s.points.array() += 0.8;
            for (int i = 0; i < m; ++i)
                s.specs.push_back(DerivSpec::partial(static_cast<int>(rng.below(static_cast<std::uint64_t>(d)))));
            const Vector fp = testutil::normals(m, rng);
            const Matrix u = pts(3);
            const double noise = trial % 2 ? 0.05 : 0.0;
            const GpModel model(p, make_data(t, f), 0.3, noise);
            const GaussianPrediction g = predict_enhanced(model, s, fp, u);

            Matrix obs(n + m, d);
            obs << t, s.points;
            std::vector<DerivSpec> specs = value_specs(n);
            specs.insert(specs.end(), s.specs.begin(), s.specs.end());
            Vector vals(n + m);
            vals << f, fp;
            const auto ref = oracle::condition(obs, specs, vals, u, p, 0.3, kRelativeJitter * p.variance, noise);
            CHECK((g.mean - ref.mean).cwiseAbs().maxCoeff() <= 1e-9);
            CHECK((g.cov - ref.cov).cwiseAbs().maxCoeff() <= 1e-9);
        }
    }
}

TEST_CASE("log marginal likelihood examples")
{
    const GpModel zero(unit, make_data(col({0.0}), vec({0.0})));
    CHECK(log_marginal_likelihood(zero) == doctest::Approx(-0.5 * kLogTwoPi).epsilon(1e-7));
    const GpModel two(unit, make_data(col({0.0}), vec({2.0})));
    CHECK(log_marginal_likelihood(two) == doctest::Approx(-2.0 - 0.5 * kLogTwoPi).epsilon(1e-7));

    const KernelParams p = KernelParams::isotropic(1.4, 0.7, 1);
    const Matrix t = col({-0.3, 0.9});
    const Vector f = vec({0.4, -1.1});
    const GpModel model(p, make_data(t, f), 0.2);
    Matrix K(2, 2);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            K(a, b) = oracle::pair_cov(t.row(a).transpose(), DerivSpec::value(), t.row(b).transpose(),
                                       DerivSpec::value(), p);
    K.diagonal().array() += kRelativeJitter * p.variance;
    const Vector r = f.array() - 0.2;
    const double dense = -0.5 * r.dot(K.inverse() * r) - 0.5 * std::log(K.determinant()) - kLogTwoPi;
    CHECK(std::abs(log_marginal_likelihood(model) - dense) <= 1e-10);
}

TEST_CASE("LML gradient agrees with central differences in log space")
{
    RngStream rng(12);
    const double h = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 1 + static_cast<int>(rng.below(2));
        const int n = 3 + static_cast<int>(rng.below(10));
        Matrix t(n, d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j)
                t(i, j) = -6.0 + 1.2 * static_cast<double>(i) + 0.4 * rng.uniform() + (j > 0 ? 3.0 * rng.uniform() : 0.0);
        const Dataset data = make_data(t, testutil::normals(n, rng));
        Vector theta(d + 1);
        theta[0] = std::log(0.5 + rng.uniform());
        for (int j = 0; j < d; ++j)
            theta[j + 1] = std::log(0.8 + rng.uniform());
        const double noise = trial % 2 ? 0.1 : 0.0;
        auto params = [d](const Vector& th) { return KernelParams(std::exp(th[0]), th.tail(d).array().exp()); };
        const LmlWithGradient g = lml_with_gradient(params(theta), data, 0.1, noise);
        for (int k = 0; k <= d; ++k) {
            Vector up = theta;
            Vector dn = theta;
            up[k] += h;
            dn[k] -= h;
            const double fd = (lml_with_gradient(params(up), data, 0.1, noise).value
                               - lml_with_gradient(params(dn), data, 0.1, noise).value)
                              / (2 * h);
            CHECK(std::abs(g.gradient[k] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("fit_hyperparameters contract")
{
    RngStream rng(31);
    const int n = 60;
    Matrix t(n, 1);
    for (int i = 0; i < n; ++i)
        t(i, 0) = -10.0 + 20.0 * rng.uniform();
    Matrix K = cov_values(t, t, unit);
    K.diagonal().array() += 1e-8;
    const Vector f = Eigen::LLT<Matrix>(K).matrixL() * testutil::normals(n, rng);
    const Dataset data = make_data(t, f);
    const KernelParams init = KernelParams::isotropic(2.0, 2.0, 1);

    FitOptions none;
    none.max_iter = 0;
    const FitResult same = fit_hyperparameters(data, init, none);
    CHECK(same.params.variance == init.variance);
    CHECK(same.params.lengthscales[0] == init.lengthscales[0]);

    FitOptions opts;
    opts.max_iter = 3000;
    const FitResult fit = fit_hyperparameters(data, init, opts);
    const double lml_init = log_marginal_likelihood(GpModel(init, data));
    CHECK(fit.lml >= lml_init - 1e-9);
    CHECK(std::abs(std::log(fit.params.variance)) <= 0.5);
    CHECK(std::abs(std::log(fit.params.lengthscales[0])) <= 0.5);

    CHECK_THROWS_AS(fit_hyperparameters(make_data(col({0.0}), vec({1.0})), unit), ArgumentError);
}

TEST_CASE("fit survives gradients far beyond the step cap")
{
    // Noisy values under an interpolating model give an enormous initial gradient.
    RngStream rng(2);
    const int n = 40;
    Matrix t(n, 1);
    Vector f(n);
    for (int i = 0; i < n; ++i) {
        t(i, 0) = -5.0 + 10.0 * (i + rng.uniform()) / n;
        f[i] = std::tanh(t(i, 0)) + 0.3 * rng.normal();
    }
    const Dataset data = make_data(t, f);
    FitOptions opts;
    opts.max_iter = 200;
    const FitResult fit = fit_hyperparameters(data, KernelParams::isotropic(1.0, 2.5, 1), opts);
    CHECK(std::isfinite(fit.lml));
    CHECK(fit.params.variance > 0.0);
}

TEST_CASE("observation noise enters the value block only")
{
    const Matrix t = col({-1.0, 0.0, 1.0});
    const Vector f = vec({-0.5, 0.1, 0.4});
    const GpModel noisy(unit, make_data(t, f), 0.0, 0.04);
    const GaussianPrediction p = posterior_value(noisy, t);
    const auto ref = oracle::condition(t, value_specs(3), f, t, unit, 0.0, kRelativeJitter, 0.04);
    CHECK((p.mean - ref.mean).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(p.cov(1, 1) > 0.01);
    CHECK_THROWS_AS(GpModel(unit, make_data(t, f), 0.0, -1.0), ArgumentError);
}

TEST_CASE("dataset validation")
{
    CHECK_THROWS_AS(GpModel(unit, make_data(col({0.0, 1.0}), vec({1.0}))), ArgumentError);
    CHECK_THROWS_AS(GpModel(unit, make_data(Matrix(0, 1), Vector(0))), ArgumentError);
    CHECK_THROWS_AS(GpModel(KernelParams::isotropic(1, 1, 2), make_data(col({0.0}), vec({1.0}))), ArgumentError);
}
