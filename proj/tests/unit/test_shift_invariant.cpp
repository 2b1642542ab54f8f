#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace fmlab;

namespace {

using Hat = std::function<cplx(const Point&)>;

Hat indicator(double a, double b, double scale = 1.0) {
    return [=](const Point& x) { return cplx(x[0] >= a && x[0] < b ? scale : 0.0); };
}

Hat gaussian(double width) {
    return [=](const Point& x) { return cplx(std::exp(-pi * width * (x[0] * x[0] + x[1] * x[1]))); };
}

GeneratorSet set1(std::vector<Hat> h, int Kmax = 3, int d = 1) {
    GeneratorSet H;
    H.d = d;
    H.hat = std::move(h);
    H.Kmax = Kmax;
    return H;
}

}  // namespace

TEST(ShiftInvariant, CellIndicatorGramianIsOne) {
    TorusGrid g(1, 64);
    auto P = gramian(set1({indicator(-0.5, 0.5)}, 1), g);
    for (std::size_t i = 0; i < P.size(); ++i) EXPECT_NEAR(P[i](0, 0).real(), 1.0, 1e-15);
}

TEST(ShiftInvariant, GaussianGramianMatchesPoissonSum) {
    // sum_k e^{-2 pi (x+k)^2} = 2^{-1/2} sum_m e^{-pi m^2 / 2} e^{2 pi i m x}
    TorusGrid g(1, 128);
    auto P = gramian(set1({gaussian(1.0)}), g);
    for (std::size_t i = 0; i < P.size(); ++i) {
        const double x = g.point(i)[0];
        double s = 1;
        for (int m = 1; m <= 20; ++m) s += 2 * std::exp(-pi * m * m / 2.0) * std::cos(2 * pi * m * x);
        EXPECT_NEAR(P[i](0, 0).real(), s / std::sqrt(2.0), 1e-10);
    }
}

TEST(ShiftInvariant, DecompositionIdentity) {
    std::mt19937_64 rng(51);
    std::normal_distribution<double> nd;
    std::vector<Hat> hats;
    for (int k = 0; k < 3; ++k) {
        const double c = nd(rng), w = 1 + std::abs(nd(rng));
        const cplx ph = std::polar(1.0, nd(rng));
        hats.push_back([=](const Point& x) { return ph * std::exp(-pi * w * (x[0] - c) * (x[0] - c)); });
    }
    auto H = set1(hats, 6);
    auto s = sample_generators(H, TorusGrid(1, 64));
    auto P = gramian(s);
    for (int m : {2, 3})
        EXPECT_LT(decomposition_residual(P, sub_gramian(s, LatticeSpec::line(m))), 1e-9) << m;

    auto H2 = set1({gaussian(1.0), gaussian(2.0)}, 3, 2);
    auto s2 = sample_generators(H2, TorusGrid(2, 16));
    auto P2 = gramian(s2);
    EXPECT_LT(decomposition_residual(P2, sub_gramian(s2, LatticeSpec::diagonal(2, 1))), 1e-9);
    EXPECT_LT(decomposition_residual(P2, sub_gramian(s2, LatticeSpec::quincunx())), 1e-9);
}

TEST(ShiftInvariant, GramianIsPositiveSemidefinite) {
    auto H = set1({gaussian(1.0), indicator(-0.3, 0.6), gaussian(3.0)});
    auto P = gramian(H, TorusGrid(1, 64));
    for (std::size_t i = 0; i < P.size(); ++i) EXPECT_GE(hermitian_eigenvalues(P[i]).minCoeff(), -1e-10);
}

TEST(ShiftInvariant, LatticeDescriptions) {
    EXPECT_EQ(LatticeSpec::line(3).index(), 3);
    EXPECT_EQ(LatticeSpec::diagonal(2, 3).index(), 6);
    EXPECT_EQ(LatticeSpec::quincunx().index(), 2);
    EXPECT_EQ(LatticeSpec::quincunx().class_of(1, 1), 0);
    EXPECT_EQ(LatticeSpec::quincunx().class_of(1, 0), 1);
    EXPECT_THROW(LatticeSpec::line(1), PreconditionError);
    EXPECT_THROW(LatticeSpec::diagonal(1, 1), PreconditionError);
}

TEST(ShiftInvariant, HalfCellIsExtraInvariant) {
    auto s = sample_generators(set1({indicator(0, 0.5)}, 1), TorusGrid(1, 256));
    auto P = gramian(s);
    auto rep = rank_formula_check(P, sub_gramian(s, LatticeSpec::line(2)));
    EXPECT_EQ(rep.verdict, "Gamma-invariant");
    EXPECT_EQ(rep.fraction, 1.0);
    EXPECT_EQ(rep.J, 1);
    EXPECT_TRUE(rep.nontrivial);
}

TEST(ShiftInvariant, GaussianIsNotExtraInvariant) {
    auto s = sample_generators(set1({gaussian(1.0)}), TorusGrid(1, 256));
    auto rep = rank_formula_check(gramian(s), sub_gramian(s, LatticeSpec::line(2)));
    EXPECT_EQ(rep.verdict, "not Gamma-invariant");
    EXPECT_LT(rep.fraction, 0.5);
}

TEST(ShiftInvariant, ZeroGeneratorIsDegenerate) {
    auto s = sample_generators(set1({[](const Point&) { return cplx(0.0); }}, 1), TorusGrid(1, 32));
    auto rep = rank_formula_check(gramian(s), sub_gramian(s, LatticeSpec::line(2)));
    EXPECT_TRUE(rep.degenerate);
    EXPECT_EQ(rep.verdict, "degenerate");
    EXPECT_EQ(rep.J, 0);
}

TEST(ShiftInvariant, GeneratorCounts) {
    TorusGrid g(1, 128);
    auto g1 = gaussian(1.0);
    auto twice = [g1](const Point& x) { return 2.0 * g1(x); };
    EXPECT_EQ(minimal_generator_count(gramian(set1({g1, twice}), g)).J, 1);
    EXPECT_EQ(minimal_generator_count(gramian(set1({g1, gaussian(2.0)}), g)).J, 2);
    // adding generators never lowers J, and J <= K
    int prev = 0;
    std::vector<Hat> hats;
    for (Hat h : {indicator(0, 0.5), indicator(0, 0.5, 3.0), gaussian(1.0), gaussian(2.0)}) {
        hats.push_back(h);
        const int J = minimal_generator_count(gramian(set1(hats), g)).J;
        EXPECT_GE(J, prev);
        EXPECT_LE(J, int(hats.size()));
        prev = J;
    }
}

TEST(ShiftInvariant, RankVerdictStableUnderMixing) {
    TorusGrid g(1, 128);
    auto check = [&](const std::vector<Hat>& h) {
        auto s = sample_generators(set1(h), g);
        return rank_formula_check(gramian(s), sub_gramian(s, LatticeSpec::line(2))).verdict;
    };
    auto a = indicator(0, 0.5);
    auto b = [](const Point& x) { return cplx(x[0] >= 0 && x[0] < 0.5 ? x[0] : 0.0); };
    auto c = gaussian(1.0), e = gaussian(2.0);
    const double t = 0.6;
    auto mix = [t](Hat u, Hat v, bool second) -> Hat {
        return [=](const Point& x) {
            return second ? -std::sin(t) * u(x) + std::cos(t) * v(x) * cplx(0, 1) : std::cos(t) * u(x) + std::sin(t) * v(x) * cplx(0, 1);
        };
    };
    EXPECT_EQ(check({a, b}), "Gamma-invariant");
    EXPECT_EQ(check({b, a}), "Gamma-invariant");
    EXPECT_EQ(check({mix(a, b, false), mix(a, b, true)}), "Gamma-invariant");
    EXPECT_EQ(check({c, e}), check({e, c}));
    EXPECT_EQ(check({c, e}), check({mix(c, e, false), mix(c, e, true)}));
}

TEST(ShiftInvariant, EigenvalueDominationToy) {
    Mat B = Mat::Zero(2, 2), A1 = Mat::Zero(2, 2), A2 = Mat::Zero(2, 2);
    B(0, 0) = 1;
    B(1, 1) = 2;
    A1(0, 0) = 1;
    A2(1, 1) = 2;
    double ex = 0;
    EXPECT_TRUE(ev_domination(B, {A1, A2}, 1e-8, 1e-9, &ex));
    EXPECT_NEAR(ex, 0.0, 1e-15);
}

TEST(ShiftInvariant, EigenvalueDominationOnConstructions) {
    TorusGrid g(1, 256);
    auto s = sample_generators(set1({indicator(0, 0.5), [](const Point& x) { return cplx(x[0] >= 0 && x[0] < 0.5 ? 1 + x[0] : 0.0); }}), g);
    auto rep = ev_domination_check(gramian(s), sub_gramian(s, LatticeSpec::line(2)));
    EXPECT_GT(rep.qualifying, 0u);
    EXPECT_TRUE(rep.holds());
    auto sg = sample_generators(set1({gaussian(1.0)}), g);
    auto rg = ev_domination_check(gramian(sg), sub_gramian(sg, LatticeSpec::line(2)));
    EXPECT_GT(rg.skipped, 0u);
}

TEST(ShiftInvariant, SqrtEigenvalueBound) {
    TorusGrid g(1, 1024);
    std::vector<int> Ns{32, 64, 128, 256};
    auto one = sqrt_eigen_regularity_check(sample_generators(set1({gaussian(1.0)}), g), 0.5, Ns);
    EXPECT_TRUE(one.bound_holds);
    EXPECT_EQ(one.pairs, 10000u);
    auto two = sqrt_eigen_regularity_check(sample_generators(set1({gaussian(1.0), gaussian(2.5)}), g), 0.5, Ns);
    EXPECT_TRUE(two.bound_holds);
    EXPECT_LE(two.max_excess, 1e-9);
}

TEST(ShiftInvariant, SqrtEigenvalueMembershipForHBeta) {
    // sqrt zeta_1 is the periodized h_0.3, in H^s iff s < 0.65
    auto H = set1({[](const Point& x) { return cplx(h_beta_value(0.3, x[0])); }}, 1);
    auto s = sample_generators(H, TorusGrid(1, 1 << 16));
    std::vector<int> Ns{64, 128, 256, 512, 1024};
    auto lo = sqrt_eigen_regularity_check(s, 0.55, Ns, 2000);
    auto hi = sqrt_eigen_regularity_check(s, 0.7, Ns, 2000);
    EXPECT_TRUE(lo.finite[0]);
    EXPECT_EQ(hi.membership[0].verdict, Divergence::divergent);
    EXPECT_TRUE(lo.bound_holds);
}

TEST(ShiftInvariant, OrthonormalTranslatesHaveUnitConstant) {
    auto H = set1({indicator(-0.5, 0.5)}, 1);
    for (double q : {2.0, 4.0, 10.0}) {
        auto rep = sis_cq_diagnostic(H, q, {2, 4, 6, 8});
        for (double v : rep.series.value) EXPECT_NEAR(v, 1.0, 1e-8);
        EXPECT_TRUE(rep.holds());
    }
}

TEST(ShiftInvariant, TailCertificate) {
    auto H = set1({gaussian(1.0)}, 1);
    EXPECT_FALSE(check_tail(H).ok);
    EXPECT_THROW(gramian(H, TorusGrid(1, 16)), PreconditionError);
    EXPECT_TRUE(check_tail(set1({gaussian(1.0)}, 3)).ok);
}
