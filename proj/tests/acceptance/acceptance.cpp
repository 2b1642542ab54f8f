// Acceptance run: one PASS/FAIL line per criterion, then the determinism
// check (AC14) comparing the digests of two complete in-process runs.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "test_util.hpp"

using namespace fmlab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
    std::vector<double> digest;  // every number the criterion computed

    void note(double v) { digest.push_back(v); }
};

struct Criterion {
    int id;
    std::string title;
    double budget_s;  // 0: no runtime requirement
    std::function<Outcome(std::uint64_t)> run;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string digest_text(const std::vector<double>& v) {
    std::string s;
    char buf[40];
    for (double x : v) {
        std::snprintf(buf, sizeof buf, "%.17g\n", x);
        s += buf;
    }
    return s;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<double> dyadic_taus(int j0, int j1) {
    std::vector<double> t;
    for (int j = j0; j <= j1; ++j) t.push_back(std::ldexp(1.0, -j));
    return t;
}

// AC1 ---------------------------------------------------------------------

Outcome spectral(std::uint64_t seed) {
    Outcome o;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> n1(2, 40), n2(1, 10);
    double worst_rt = 0, worst_pv = 0;
    for (int t = 0; t < 100; ++t) {
        const int d = t < 50 ? 1 : 2;
        FreqBox box(d, d == 1 ? n1(rng) : n2(rng));
        TorusGrid g(d, d == 1 ? 128 : 32);
        auto c = oracle::random_coeffs(box, rng, t % 2 == 0);
        auto f = synthesize(c, g);
        auto back = analyze(f, box);
        double scale = 0, err = 0, energy = 0;
        for (std::size_t i = 0; i < box.size(); ++i) {
            scale = std::max(scale, std::abs(c.coeffs[i]));
            err = std::max(err, std::abs(back.coeffs[i] - c.coeffs[i]));
            energy += std::norm(c.coeffs[i]);
        }
        const double l2 = lp_norm(f, 2);
        worst_rt = std::max(worst_rt, err / scale);
        worst_pv = std::max(worst_pv, std::abs(l2 * l2 - energy) / energy);
        o.note(l2);
    }
    o.note(worst_rt);
    o.note(worst_pv);
    o.pass = worst_rt < 1e-10 && worst_pv < 1e-10;
    o.detail = "round-trip " + fmt("%.2e", worst_rt) + ", Parseval " + fmt("%.2e", worst_pv);
    return o;
}

// AC2 ---------------------------------------------------------------------

Outcome operator_oracles(std::uint64_t seed) {
    Outcome o;
    std::mt19937_64 rng(seed);
    double worst_svd = 0, worst_mc = 0;
    for (int t = 0; t < 25; ++t) {
        // d = 1 boxes of side 5..25, and two d = 2 boxes of side 3 and 5
        const int d = t < 23 ? 1 : 2;
        const FreqBox box(d, d == 1 ? 2 + t % 11 : t - 22);
        auto u = oracle::random_coeffs(FreqBox(d, 3), rng);
        auto op = build_operator(u, box, box);
        const double svd = norm_2_2(op).value;
        PowerOptions po;
        po.force_power = true;
        po.tol = 1e-13;
        const double pow_it = norm_2_2(op, po).value;
        worst_svd = std::max(worst_svd, std::abs(svd - pow_it) / svd);
        o.note(svd);
        for (double q : {3.0, 4.0, 6.0}) {
            const double up = norm_2_q(op, q).upper;
            const double mc = oracle::monte_carlo_2q(op.dense(), q, rng);
            worst_mc = std::max(worst_mc, std::abs(up - mc) / mc);
            o.note(up);
            o.note(mc);
        }
    }
    o.pass = worst_svd < 1e-8 && worst_mc < 5e-3;
    o.detail = "SVD vs power " + fmt("%.2e", worst_svd) + ", ascent vs Monte-Carlo " + fmt("%.3f%%", 100 * worst_mc);
    return o;
}

// AC3 ---------------------------------------------------------------------

Outcome linf_surrogate(std::uint64_t) {
    Outcome o;
    auto u = sample(TorusGrid(1, 512), [](const Point& x) { return 2 + std::cos(2 * pi * x[0]); });
    double v = 0;
    std::string trail;
    for (int N : {8, 16, 32, 64}) {
        v = norm_2_2(build_operator(u, FreqBox(1, N))).value;
        o.note(v);
        trail += (trail.empty() ? "" : " ") + fmt("%.5f", v);
    }
    o.pass = std::abs(v - 3) <= 0.02 * 3;
    o.detail = "norm_2_2 at N = 8..64: " + trail;
    return o;
}

// AC4 ---------------------------------------------------------------------

Outcome l2_identity(std::uint64_t seed) {
    Outcome o;
    std::mt19937_64 rng(seed);
    const TorusGrid g(1, 2048);
    std::vector<std::pair<std::string, SampleField>> syms;
    for (double b : {0.3, 0.5, 0.8}) syms.emplace_back("w_" + fmt("%.1f", b), w_beta(BetaParams(b), g));
    syms.emplace_back("2+cos", sample(g, [](const Point& x) { return 2 + std::cos(2 * pi * x[0]); }));
    syms.emplace_back("|sin|", sample(g, [](const Point& x) { return std::abs(std::sin(pi * x[0])); }));
    syms.emplace_back("h_0.3", h_beta_field(0.3, g));
    syms.emplace_back("exp cos", sample(g, [](const Point& x) { return std::exp(std::cos(2 * pi * x[0])); }));
    for (int k = 0; k < 3; ++k) syms.emplace_back("trig", synthesize(oracle::random_coeffs(FreqBox(1, 5), rng), g));
    // the input box covers every frequency the grid resolves except Nyquist
    const FreqBox in(1, g.n() / 2 - 1), out(1, 0);
    double worst = 0;
    for (const auto& [name, u] : syms) {
        const double a = norm_2_inf(build_operator(u, in, out)), b = lp_norm(u, 2);
        worst = std::max(worst, std::abs(a - b));
        o.note(a);
        o.note(b);
    }
    o.pass = worst < 1e-6;
    o.detail = std::to_string(syms.size()) + " symbols, max |norm_2_inf - L2| " + fmt("%.2e", worst);
    return o;
}

// AC5, AC6 ------------------------------------------------------------------

const SampleField& w03_fine() {
    static const SampleField w = w_beta(BetaParams(0.3), TorusGrid(1, 1 << 13));
    return w;
}

// Midpoint between the last q where `binds` holds and the first where it
// does not; NaN when the verdicts are not a single switch.
double flip_point(const std::vector<double>& qs, const std::vector<bool>& binds) {
    std::size_t k = 0;
    while (k < binds.size() && binds[k]) ++k;
    for (std::size_t i = k; i < binds.size(); ++i)
        if (binds[i]) return std::nan("");
    if (k == 0 || k == binds.size()) return std::nan("");
    return 0.5 * (qs[k - 1] + qs[k]);
}

Outcome threshold_flip(std::uint64_t) {
    Outcome o;
    const std::vector<double> qs{4, 4.5, 5, 5.5, 6};
    std::vector<bool> tau_binds, divergent;
    std::string v1, v2;
    for (double q : qs) {
        auto ts = tau_scan(w03_fine(), q, dyadic_taus(4, 10));
        tau_binds.push_back(ts.binds());
        o.note(ts.ratio_fit.slope);
        v1 += ts.verdict.substr(0, 4) + " ";
        auto ri = classify_divergence(reciprocal_integrability_scan(BetaParams(0.3), q, {4, 6, 8, 10, 12, 14, 16, 18, 20}));
        divergent.push_back(ri.verdict == Divergence::divergent);
        o.note(ri.increment.slope);
        v2 += std::string(to_string(ri.verdict)).substr(0, 4) + " ";
    }
    const double f1 = flip_point(qs, tau_binds), f2 = flip_point(qs, divergent);
    o.note(f1);
    o.note(f2);
    o.pass = std::abs(f1 - 5) <= 0.5 && std::abs(f2 - 5) <= 0.5;
    o.detail = "tau-scan [" + v1 + "] flip " + fmt("%.2f", f1) + "; 1/w integrability [" + v2 + "] flip " + fmt("%.2f", f2);
    return o;
}

Outcome mass_exponent(std::uint64_t) {
    Outcome o;
    auto ts = tau_scan(w03_fine(), 5, dyadic_taus(4, 10));
    o.note(ts.mass_fit.slope);
    o.note(ts.threshold_q);
    o.pass = std::abs(ts.mass_fit.slope - 0.8) <= 0.05;
    o.detail = "mass slope " + fmt("%.4f", ts.mass_fit.slope) + ", q threshold " + fmt("%.3f", ts.threshold_q) +
               ", r2 " + fmt("%.5f", ts.mass_fit.r_squared);
    return o;
}

// AC7 ---------------------------------------------------------------------

Outcome decay_and_frontier(std::uint64_t) {
    Outcome o;
    // integer frequencies: the leading term of h^ carries cos(pi xi - phase),
    // whose modulus is constant there
    ScanSeries dec("hhat_sq");
    for (int j = 0; j <= 16; ++j) {
        const double xi = std::round(10 * std::pow(100.0, j / 16.0));
        dec.push(xi, std::pow(h_beta_transform(0.3, xi), 2));
    }
    auto df = loglog_fit(dec);
    o.note(df.slope);
    auto c = h_beta_coeffs(0.3, FreqBox(1, 2048));
    const std::vector<int> Ns{128, 256, 512, 1024, 2048};
    std::vector<double> ss;
    std::vector<bool> conv;
    for (int i = 0; i <= 10; ++i) {
        const double s = 0.55 + 0.02 * i;
        auto r = classify_divergence(hs_partial_sums(c, s, Ns));
        ss.push_back(s);
        conv.push_back(r.verdict == Divergence::convergent);
        o.note(r.increment.slope);
    }
    const double frontier = flip_point(ss, conv);
    o.note(frontier);
    o.pass = std::abs(df.slope + 2.3) <= 0.1 && std::abs(frontier - 0.65) <= 0.03;
    o.detail = "decay exponent " + fmt("%.4f", df.slope) + ", H^s frontier " + fmt("%.3f", frontier);
    return o;
}

// AC8 ---------------------------------------------------------------------

Mat random_hermitian(int K, std::mt19937_64& rng) {
    Mat A(K, K);
    std::normal_distribution<double> nd;
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) A(i, j) = cplx(nd(rng), nd(rng));
    return 0.5 * (A + A.adjoint());
}

HermitianField random_field(const TorusGrid& g, std::mt19937_64& rng) {
    const int modes = 2;
    std::vector<Mat> H, A;
    for (int k = 0; k <= modes; ++k) H.push_back(random_hermitian(2, rng) / double(1 + k));
    for (int k = 1; k <= modes; ++k) A.push_back(Mat(random_hermitian(2, rng)) * cplx(0.3, 0.4) / double(1 + k));
    return sample_hermitian(g, 2, [&](const Point& x) {
        Mat m = H[0];
        for (int k = 1; k <= modes; ++k) {
            Mat t = A[std::size_t(k - 1)] * std::exp(cplx(0, 2 * pi * k * x[0]));
            m += t + t.adjoint();
        }
        return m;
    });
}

Outcome matrix_equivalence(std::uint64_t seed) {
    Outcome o;
    std::mt19937_64 rng(seed);
    const TorusGrid g(1, 64);
    int held = 0, total = 0;
    double worst_ratio = 0;
    for (int t = 0; t < 50; ++t) {
        auto U = random_field(g, rng);
        for (double q : {3.0, 4.0, 6.0}) {
            auto rep = equivalence_check(U, q, FreqBox(1, 8));
            ++total;
            held += rep.holds();
            const double lmax = *std::max_element(rep.lambda_upper.begin(), rep.lambda_upper.end());
            worst_ratio = std::max(worst_ratio, rep.matrix_upper / (std::sqrt(2.0) * lmax));
            o.note(rep.matrix_upper);
            o.note(lmax);
        }
    }
    o.pass = held == total;
    o.detail = std::to_string(held) + "/" + std::to_string(total) + " hold; max ||T_U|| / (sqrt K max ||T_lambda||) " +
               fmt("%.4f", worst_ratio);
    return o;
}

// AC9 ---------------------------------------------------------------------

Outcome zak_invariants(std::uint64_t) {
    Outcome o;
    const auto w = gaussian_window(6);
    auto Z = zak_transform(w, 256);
    const double qp = quasi_periodicity_residual(Z);
    const double defect = unitarity(Z, w).defect;
    auto m = min_modulus(Z);
    const bool localized = std::abs(m.x - 0.5) <= 1.0 / 256 && std::abs(m.y - 0.5) <= 1.0 / 256;
    ScanSeries mins("min_modulus");
    for (int M : {16, 32, 64, 128, 256}) mins.push(M, min_modulus(zak_transform(w, M)).modulus);
    auto mf = loglog_fit(mins);
    for (double v : {qp, defect, m.x, m.y, m.modulus, mf.slope}) o.note(v);
    o.pass = qp < 1e-8 && defect < 1e-6 && localized && mf.slope < 0;
    o.detail = "quasi-periodicity " + fmt("%.1e", qp) + ", unitarity defect " + fmt("%.1e", defect) + ", min at (" +
               fmt("%.4f", m.x) + ", " + fmt("%.4f", m.y) + "), min slope " + fmt("%.3f", mf.slope);
    return o;
}

// AC10 --------------------------------------------------------------------

Outcome gabor_dichotomy(std::uint64_t) {
    Outcome o;
    const auto g = gaussian_window(6);
    auto s2 = gabor_cq_scan(g, 2, {4, 6, 8, 12});
    auto s40 = gabor_cq_scan(g, 40, {4, 8, 12, 16});
    for (double v : s2.series.value) o.note(v);
    for (double v : s40.series.value) o.note(v);
    o.pass = s2.fit.slope < 0 && s2.trend == Trend::vanishing && s40.trend == Trend::stable && s40.series.value.back() > 0;
    o.detail = "q=2 slope " + fmt("%.3f", s2.fit.slope) + " (" + to_string(s2.trend) + "); q=40 D " +
               fmt("%.4f", s40.series.value.front()) + " -> " + fmt("%.4f", s40.series.value.back()) + ", slope " +
               fmt("%.3f", s40.fit.slope) + " (" + to_string(s40.trend) + ")";
    return o;
}

// AC11 --------------------------------------------------------------------

Outcome sharpness_family(std::uint64_t) {
    Outcome o;
    const double beta = 0.45;
    GeneratorSet H;
    H.d = 1;
    H.Kmax = 1;
    auto F = tensor_F_beta(beta, 1);
    H.hat = {[F](const Point& x) { return cplx(F(x)); }};
    auto rep = sis_cq_diagnostic(H, 4, {8, 16, 32, 64, 128});
    for (double v : rep.series.value) o.note(v);
    auto tab = tabulate_radial([beta](double xi) { return cplx(h_beta_transform(beta, xi)); }, 512, true);
    const auto Rs = dyadic_radii(3, 9);
    auto lo = classify_divergence(localization_scan(tab, 1.4, Rs));
    auto hi = classify_divergence(localization_scan(tab, 1.6, Rs));
    o.note(lo.increment.slope);
    o.note(hi.increment.slope);
    o.pass = rep.holds() && lo.verdict == Divergence::convergent && hi.verdict == Divergence::divergent;
    o.detail = std::string("(C_4) ") + to_string(rep.trend) + " (slope " + fmt("%.4f", rep.fit.slope) + "); t=1.4 " +
               to_string(lo.verdict) + ", t=1.6 " + to_string(hi.verdict);
    return o;
}

// AC12 --------------------------------------------------------------------

GeneratorSet gen(std::vector<std::function<cplx(const Point&)>> h, int Kmax) {
    GeneratorSet H;
    H.d = 1;
    H.hat = std::move(h);
    H.Kmax = Kmax;
    return H;
}

Outcome extra_invariance(std::uint64_t) {
    Outcome o;
    const TorusGrid g(1, 256);
    const auto lat = LatticeSpec::line(2);
    auto half = [](const Point& x) { return cplx(x[0] >= 0 && x[0] < 0.5 ? 1.0 : 0.0); };
    auto ramp = [](const Point& x) { return cplx(x[0] >= 0 && x[0] < 0.5 ? 1 + x[0] : 0.0); };
    auto gauss = [](const Point& x) { return cplx(std::exp(-pi * x[0] * x[0])); };
    auto sh = sample_generators(gen({half}, 1), g);
    auto rh = rank_formula_check(gramian(sh), sub_gramian(sh, lat));
    auto sg = sample_generators(gen({gauss}, 3), g);
    auto rg = rank_formula_check(gramian(sg), sub_gramian(sg, lat));
    std::size_t qualifying = 0, violations = 0;
    double excess = -HUGE_VAL;
    for (const auto& s : {sh, sample_generators(gen({half, ramp}, 1), g), sg}) {
        auto dom = ev_domination_check(gramian(s), sub_gramian(s, lat), 1e-8, 1e-9);
        qualifying += dom.qualifying;
        violations += dom.violations;
        if (dom.qualifying) excess = std::max(excess, dom.max_excess);
    }
    for (double v : {rh.fraction, double(rh.J), rg.fraction, double(qualifying), excess}) o.note(v);
    const bool half_ok = rh.verdict == "Gamma-invariant" && rh.J == 1 && rh.nontrivial;
    o.pass = half_ok && rg.verdict == "not Gamma-invariant" && qualifying > 0 && violations == 0;
    o.detail = "half-cell: " + rh.verdict + ", J = " + std::to_string(rh.J) + (rh.nontrivial ? ", non-trivial" : "") +
               "; Gaussian: " + rg.verdict + "; domination " + std::to_string(qualifying - violations) + "/" +
               std::to_string(qualifying) + " samples";
    return o;
}

// AC13 --------------------------------------------------------------------

Outcome zero_sets(std::uint64_t) {
    Outcome o;
    BetaParams p(0.3);
    auto point = generalized_zero_set(w_beta(p, TorusGrid(1, 1024)), {3, 4, 5, 6, 7, 8});
    auto line = generalized_zero_set(
        sample(TorusGrid(2, 512), [&](const Point& x) { return w_beta_value(p, {x[0], 0.0}); }), {3, 4, 5, 6, 7, 8});
    const std::vector<double> qs{4, 4.5, 5.5, 6};
    auto hs = hausdorff_obstruction_scan(w03_fine(), 0, 0.79, 2, qs, {4, 5, 6, 7, 8, 9, 10});
    int agree = 0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        const bool a = hs.entries[i].binds(), b = tau_scan(w03_fine(), qs[i], dyadic_taus(4, 10)).binds();
        agree += a == b;
        o.note(hs.entries[i].exponent);
    }
    o.note(point.dimension);
    o.note(line.dimension);
    o.pass = !point.empty && std::abs(point.dimension) <= 0.15 && !line.empty && std::abs(line.dimension - 1) <= 0.15 &&
             agree == int(qs.size());
    o.detail = "point " + fmt("%.3f", point.dimension) + ", line " + fmt("%.3f", line.dimension) +
               ", sigma=0 agreement " + std::to_string(agree) + "/" + std::to_string(qs.size());
    return o;
}

std::vector<Criterion> criteria() {
    return {
        {1, "spectral correctness", 10, spectral},
        {2, "operator-norm oracles", 120, operator_oracles},
        {3, "M_2^2 = L^inf surrogate", 0, linf_surrogate},
        {4, "M_2^inf = L^2 identity", 0, l2_identity},
        {5, "threshold flip at q = 5", 60, threshold_flip},
        {6, "L^2-mass exponent", 0, mass_exponent},
        {7, "h_beta decay and H^s frontier", 0, decay_and_frontier},
        {8, "matrix/eigenvalue equivalence", 300, matrix_equivalence},
        {9, "Zak invariants", 0, zak_invariants},
        {10, "Gabor (C_q) dichotomy", 180, gabor_dichotomy},
        {11, "translate-system sharpness", 0, sharpness_family},
        {12, "extra-invariance rank formula", 0, extra_invariance},
        {13, "zero-set dimension", 0, zero_sets},
    };
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::uint64_t seed = default_seed;
    std::vector<int> expect_fail, only;
    bool no_repeat = false;
    app.add_option("--seed", seed, "base seed");
    app.add_option("--expect-fail", expect_fail, "criteria known to fail; exit 0 if exactly these fail");
    app.add_option("--only", only, "run a subset (disables AC14)");
    app.add_flag("--no-repeat", no_repeat, "skip the determinism rerun (AC14)");
    CLI11_PARSE(app, argc, argv);

    const std::set<int> wanted(only.begin(), only.end());
    std::map<int, bool> verdict;
    std::map<int, std::string> first_digest;
    for (const auto& c : criteria()) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run(seed + std::uint64_t(c.id));
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("error: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.budget_s == 0 || secs < c.budget_s;
        verdict[c.id] = o.pass && in_time;
        first_digest[c.id] = digest_text(o.digest);
        std::printf("AC%-2d %s  %s: %s [%.1f s%s]\n", c.id, verdict[c.id] ? "PASS" : "FAIL", c.title.c_str(),
                    o.detail.c_str(), secs, in_time ? "" : fmt(", over %.0f s budget", c.budget_s).c_str());
        std::fflush(stdout);
    }

    if (wanted.empty() && !no_repeat) {
        const auto t0 = std::chrono::steady_clock::now();
        int same = 0, n = 0;
        std::string all;
        for (const auto& c : criteria()) {
            std::string again;
            try {
                again = digest_text(c.run(seed + std::uint64_t(c.id)).digest);
            } catch (const std::exception& e) {
                again = e.what();
            }
            ++n;
            same += again == first_digest[c.id];
            all += again;
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        verdict[14] = same == n;
        std::printf("AC14 %s  determinism: %d/%d criteria byte-identical on rerun, digest %016llx [%.1f s]\n",
                    verdict[14] ? "PASS" : "FAIL", same, n, static_cast<unsigned long long>(fnv1a(all)), secs);
    }

    const std::set<int> expected(expect_fail.begin(), expect_fail.end());
    std::set<int> failed;
    for (const auto& [id, ok] : verdict)
        if (!ok) failed.insert(id);
    int rc = 0;
    for (int id : failed)
        if (!expected.count(id)) rc = 1;
    for (int id : expected)
        if (verdict.count(id) && verdict[id]) {
            std::printf("note: AC%d expected to fail but passed\n", id);
            rc = 1;
        }
    std::printf("%zu/%zu criteria passed\n", verdict.size() - failed.size(), verdict.size());
    return rc;
}
