#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>

#include <boost/version.hpp>
#include <CLI11.hpp>

#include "cli_io.hpp"

using namespace fmlab;
using fmcli::Csv;
using fmcli::num;
using fmcli::nums;
using fmcli::ordered_json;

namespace {

constexpr int exit_ok = 0, exit_verdict = 2, exit_precondition = 3, exit_usage = 64;

struct Global {
    std::string out = "fmlab-out";
    std::uint64_t seed = default_seed;
    int workers = 1;
    bool verbose = false;
};

struct Run {
    ordered_json result = ordered_json::object();
    Csv csv;
    bool verdict_ok = true;  // false: a built-in check failed (exit 2)
};

void log(const Global& g, const std::string& msg) {
    if (g.verbose) std::cerr << "[fmlab] " << msg << '\n';
}

// Named fields -------------------------------------------------------------

struct FieldOpts {
    std::string field = "w_beta";
    std::string samples;
    double beta = 0.3;
    int d = 1;
    int n = 1024;

    void add(CLI::App* c, const std::string& def) {
        field = def;
        c->add_option("--field", field, "w_beta | h_beta | line_zero | sin | two_plus_cos | const | csv")
            ->capture_default_str();
        c->add_option("--samples", samples, "CSV with a 'value' column (field = csv)");
        c->add_option("--beta", beta, "construction exponent")->capture_default_str();
        c->add_option("--d", d, "dimension (1 or 2)")->capture_default_str();
        c->add_option("--n", n, "grid points per axis (power of two)")->capture_default_str();
    }

    SampleField make() const {
        if (field == "csv") {
            require(!samples.empty(), "field = csv needs --samples");
            return fmcli::read_samples(samples, d);
        }
        TorusGrid g(d, n);
        if (field == "w_beta") return w_beta(BetaParams(beta, d), g);
        if (field == "h_beta") {
            require(d == 1, "h_beta field: d must be 1");
            return h_beta_field(beta, g);
        }
        if (field == "line_zero") {
            require(d == 2, "line_zero field: d must be 2");
            BetaParams p(beta);
            return sample(g, [&](const Point& x) { return w_beta_value(p, {x[0], 0.0}); });
        }
        if (field == "sin") return sample(g, [](const Point& x) { return std::sin(2 * pi * x[0]); });
        if (field == "two_plus_cos") return sample(g, [](const Point& x) { return 2 + std::cos(2 * pi * x[0]); });
        if (field == "const") return sample(g, [](const Point&) { return 1.0; });
        throw PreconditionError("unknown field '" + field + "'");
    }
};

// Generator specs for the translate-system commands: gaussian:w,
// indicator:a:b, hbeta:beta (all on the Fourier side, d = 1 unless gaussian).
std::function<cplx(const Point&)> parse_generator(const std::string& spec, int d) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    require(!parts.empty(), "empty generator spec");
    auto arg = [&](std::size_t i) {
        require(parts.size() > i, "generator '" + spec + "' is missing a parameter");
        return std::stod(parts[i]);
    };
    const std::string& kind = parts[0];
    if (kind == "gaussian") {
        const double w = arg(1);
        return [w](const Point& x) { return cplx(std::exp(-pi * w * (x[0] * x[0] + x[1] * x[1]))); };
    }
    if (kind == "indicator") {
        const double a = arg(1), b = arg(2);
        return [a, b, d](const Point& x) {
            const bool in = x[0] >= a && x[0] < b && (d == 1 || (x[1] >= a && x[1] < b));
            return cplx(in ? 1.0 : 0.0);
        };
    }
    if (kind == "hbeta") {
        auto F = tensor_F_beta(arg(1), d);
        return [F](const Point& x) { return cplx(F(x)); };
    }
    throw PreconditionError("unknown generator kind '" + kind + "'");
}

GeneratorSet make_generators(const std::vector<std::string>& specs, int d, int Kmax) {
    require(!specs.empty(), "at least one --generator is required");
    GeneratorSet H;
    H.d = d;
    H.Kmax = Kmax;
    for (const auto& s : specs) H.hat.push_back(parse_generator(s, d));
    return H;
}

LatticeSpec parse_lattice(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() == 2 && parts[0] == "line") return LatticeSpec::line(std::stoi(parts[1]));
    if (parts.size() == 3 && parts[0] == "diagonal") return LatticeSpec::diagonal(std::stoi(parts[1]), std::stoi(parts[2]));
    if (parts.size() == 1 && parts[0] == "quincunx") return LatticeSpec::quincunx();
    throw PreconditionError("lattice must be line:m, diagonal:a:b or quincunx");
}

std::vector<double> dyadic(int j0, int j1, bool negative) {
    require(j0 <= j1, "scale range must satisfy j0 <= j1");
    std::vector<double> v;
    for (int j = j0; j <= j1; ++j) v.push_back(std::ldexp(1.0, negative ? -j : j));
    return v;
}

// transform --------------------------------------------------------------

struct TransformOpts {
    FieldOpts f;
    std::string mode = "random";
    int N = 16;
    int trials = 10;
    double tol = 1e-10;
};

void run_transform(const TransformOpts& o, const Global& g, Run& r) {
    if (o.mode == "random") {
        std::mt19937_64 rng(g.seed);
        std::normal_distribution<double> nd;
        TorusGrid grid(o.f.d, o.f.n);
        FreqBox box(o.f.d, o.N);
        r.csv.header({"trial", "roundtrip_error", "parseval_error"});
        double worst_rt = 0, worst_pv = 0;
        for (int t = 0; t < o.trials; ++t) {
            CoeffField c(box);
            for (auto& z : c.coeffs) z = cplx(nd(rng), nd(rng));
            auto f = synthesize(c, grid);
            auto back = analyze(f, box);
            double scale = 0, err = 0, energy = 0;
            for (std::size_t i = 0; i < box.size(); ++i) {
                scale = std::max(scale, std::abs(c.coeffs[i]));
                err = std::max(err, std::abs(back.coeffs[i] - c.coeffs[i]));
                energy += std::norm(c.coeffs[i]);
            }
            const double l2 = lp_norm(f, 2), rt = err / scale, pv = std::abs(l2 * l2 - energy) / energy;
            worst_rt = std::max(worst_rt, rt);
            worst_pv = std::max(worst_pv, pv);
            r.csv.row({std::to_string(t), Csv::cell(rt), Csv::cell(pv)});
        }
        r.verdict_ok = worst_rt <= o.tol && worst_pv <= o.tol;
        r.result["roundtrip_error"] = num(worst_rt);
        r.result["parseval_error"] = num(worst_pv);
        r.result["tolerance"] = o.tol;
        r.result["pass"] = r.verdict_ok;
        return;
    }
    require(o.mode == "field", "transform: --mode must be random or field");
    auto f = o.f.make();
    auto c = analyze(f, FreqBox(f.grid.d(), o.N));
    double energy = 0;
    r.csv.header({"k1", "k2", "re", "im", "abs"});
    for (std::size_t i = 0; i < c.size(); ++i) {
        auto k = c.box.freq(i);
        energy += std::norm(c.coeffs[i]);
        r.csv.row({std::to_string(k[0]), std::to_string(k[1]), Csv::cell(c.coeffs[i].real()), Csv::cell(c.coeffs[i].imag()),
                   Csv::cell(std::abs(c.coeffs[i]))});
    }
    const double l2 = lp_norm(f, 2);
    r.result["l2_norm"] = num(l2);
    r.result["box_energy"] = num(energy);
    r.result["energy_outside_box"] = num(l2 * l2 - energy);
}

// sobolev ----------------------------------------------------------------

struct SobolevOpts {
    FieldOpts f;
    double s = 0.5;
    double r = 2;
    std::vector<int> Ns{32, 64, 128, 256};
    std::vector<double> aniso;
};

void run_sobolev(const SobolevOpts& o, const Global& g, Run& r) {
    auto f = o.f.make();
    const int d = f.grid.d();
    const int Nmax = *std::max_element(o.Ns.begin(), o.Ns.end());
    require(FreqBox(d, Nmax).fits(f.grid), "sobolev: largest N needs 2N+1 <= n");
    // grid coefficients of h_beta carry an aliasing floor from the endpoint
    // singularity; the quadrature coefficients do not
    const bool exact = o.f.field == "h_beta";
    auto c = exact ? h_beta_coeffs(o.f.beta, FreqBox(1, Nmax)) : analyze(f, FreqBox(d, Nmax));
    SlobodeckijOptions so;
    so.workers = g.workers;
    r.result["construction"] = o.f.field;
    r.result["coefficients"] = exact ? "quadrature" : "grid";
    r.result["hs_seminorm"] = num(hs_seminorm(c, o.s));
    auto ps = hs_partial_sums(c, o.s, o.Ns);
    r.result["hs_partial_sums"] = fmcli::series_json(ps);
    if (ps.size() >= 4) r.result["hs_membership"] = fmcli::divergence_json(classify_divergence(ps));
    r.result["sobolev_seminorm"] = num(sobolev_seminorm(f, o.s, o.r, so));
    if (o.s < 1) r.result["slobodeckij_seminorm"] = num(slobodeckij_seminorm(f, o.s, o.r, so));
    if (d == 2 && o.s < 1) r.result["line_restriction_seminorm_pow"] = num(line_restriction_seminorm(f, o.s, o.r));
    if (!o.aniso.empty()) r.result["aniso_seminorm"] = num(aniso_seminorm(c, AnisoParams(o.aniso)));
    r.result["smoothness_index"] = num(SobolevParams(o.s, o.r).alpha(d));
    r.csv.header({"param", "value"});
    for (std::size_t i = 0; i < ps.size(); ++i) r.csv.row({Csv::cell(ps.param[i]), Csv::cell(ps.value[i])});
}

// multnorm ---------------------------------------------------------------

struct MultnormOpts {
    FieldOpts f;
    std::string symbol = "const";
    double value = 1;
    int N = 8;
    int symbol_N = 3;
    int K = 1;
    std::vector<double> qs;
    int restarts = 20;
};

HermitianField random_hermitian_field(const TorusGrid& grid, int K, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    auto herm = [&] {
        Mat A(K, K);
        for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j) A(i, j) = cplx(nd(rng), nd(rng));
        return Mat(0.5 * (A + A.adjoint()));
    };
    Mat H0 = herm(), A1 = herm() * cplx(0.3, 0.4), A2 = herm() * cplx(0.3, 0.4) / 2.0;
    return sample_hermitian(grid, K, [&](const Point& x) {
        Mat t1 = A1 * std::exp(cplx(0, 2 * pi * x[0])), t2 = A2 * std::exp(cplx(0, 4 * pi * x[0]));
        return Mat(H0 + t1 + t1.adjoint() + t2 + t2.adjoint());
    });
}

ordered_json estimate_json(const MixedNormEstimate& e) {
    return {{"q", num(e.q)},          {"lower", num(e.lower)},       {"upper", num(e.upper)},
            {"bound", num(e.bound)},  {"exact", e.exact},            {"converged", e.converged},
            {"iterations", e.iterations}, {"witness", fmcli::vec_json(e.witness)}};
}

void run_multnorm(const MultnormOpts& o, const Global& g, Run& r) {
    std::mt19937_64 rng(g.seed);
    AscentOptions ao;
    ao.seed = g.seed;
    ao.workers = g.workers;
    ao.restarts = o.restarts;
    const FreqBox box(o.f.d, o.N);
    r.csv.header({"q", "lower", "upper", "bound"});
    if (o.K >= 2) {
        auto U = random_hermitian_field(TorusGrid(o.f.d, o.f.n), o.K, rng);
        ordered_json entries = ordered_json::array();
        for (double q : o.qs) {
            auto m = matrix_norm_2_q(U, q, box, ao);
            auto eq = equivalence_check(U, q, box, ao);
            r.verdict_ok = r.verdict_ok && eq.holds();
            entries.push_back({{"estimate", estimate_json(m)},
                               {"lambda_upper", nums(eq.lambda_upper)},
                               {"scalar_side", eq.scalar_side},
                               {"matrix_side", eq.matrix_side}});
            r.csv.row({Csv::cell(q), Csv::cell(m.lower), Csv::cell(m.upper), Csv::cell(m.bound)});
        }
        r.result["K"] = o.K;
        r.result["matrix_norm_2_q"] = entries;
        return;
    }
    ConvOperator op = [&] {
        if (o.symbol == "const") {
            CoeffField u(FreqBox(o.f.d, 0));
            u.at(0, 0) = o.value;
            return build_operator(u, box, box);
        }
        if (o.symbol == "random") {
            CoeffField u(FreqBox(o.f.d, o.symbol_N));
            std::normal_distribution<double> nd;
            for (auto& z : u.coeffs) z = cplx(nd(rng), nd(rng));
            return build_operator(u, box, box);
        }
        FieldOpts f = o.f;
        f.field = o.symbol;
        return build_operator(f.make(), box);
    }();
    const auto n22 = norm_2_2(op);
    r.result["norm_2_2"] = num(n22.value);
    r.result["norm_2_2_method"] = n22.method;
    r.result["norm_2_inf"] = num(norm_2_inf(op));
    ordered_json entries = ordered_json::array();
    for (double q : o.qs) {
        auto e = norm_2_q(op, q, ao);
        entries.push_back(estimate_json(e));
        r.csv.row({Csv::cell(q), Csv::cell(e.lower), Csv::cell(e.upper), Csv::cell(e.bound)});
    }
    if (!o.qs.empty()) r.result["norm_2_q"] = entries;
}

// tau-scan ---------------------------------------------------------------

struct TauOpts {
    FieldOpts f;
    std::vector<double> qs{4, 4.5, 5, 5.5, 6};
    int j0 = 4, j1 = 10;
};

void run_tau(const TauOpts& o, const Global&, Run& r) {
    auto w = o.f.make();
    auto taus = dyadic(o.j0, o.j1, true);
    r.csv.header({"q", "tau", "mass", "ratio"});
    ordered_json entries = ordered_json::array();
    std::vector<double> qs = o.qs;
    std::sort(qs.begin(), qs.end());
    double last_bind = std::nan(""), first_free = std::nan("");
    for (double q : qs) {
        auto t = tau_scan(w, q, taus);
        entries.push_back({{"q", num(q)},
                           {"verdict", t.verdict},
                           {"mass_fit", fmcli::fit_json(t.mass_fit)},
                           {"ratio_fit", fmcli::fit_json(t.ratio_fit)},
                           {"threshold_q", num(t.threshold_q)}});
        if (t.binds()) last_bind = q;
        if (!t.binds() && std::isnan(first_free)) first_free = q;
        for (std::size_t i = 0; i < t.mass.size(); ++i)
            r.csv.row({Csv::cell(q), Csv::cell(t.mass.param[i]), Csv::cell(t.mass.value[i]), Csv::cell(t.ratio.value[i])});
    }
    r.result["scans"] = entries;
    r.result["flip_q"] = num(!std::isnan(last_bind) && !std::isnan(first_free) && last_bind < first_free
                                 ? 0.5 * (last_bind + first_free)
                                 : std::nan(""));
}

// construct --------------------------------------------------------------

struct ConstructOpts {
    std::string kind = "w_beta";
    double beta = 0.3;
    int d = 1;
    int n = 256;
    double xi_max = 100;
    double xi_step = 1;
};

void run_construct(const ConstructOpts& o, const Global&, Run& r) {
    r.result["kind"] = o.kind;
    if (o.kind == "h_beta_hat") {
        require(o.xi_step > 0 && o.xi_max > 0, "construct: xi range must be positive");
        r.csv.header({"xi", "value"});
        double peak = 0;
        for (double xi = 0; xi <= o.xi_max + 1e-12; xi += o.xi_step) {
            const double v = h_beta_transform(o.beta, xi);
            peak = std::max(peak, std::abs(v));
            r.csv.row({Csv::cell(xi), Csv::cell(v)});
        }
        r.result["max_abs"] = num(peak);
        return;
    }
    TorusGrid g(o.d, o.n);
    SampleField f;
    if (o.kind == "F_beta") {
        auto F = tensor_F_beta(o.beta, o.d);
        f = sample(g, [&](const Point& x) { return F(x); });
    } else {
        FieldOpts fo;
        fo.field = o.kind;
        fo.beta = o.beta;
        fo.d = o.d;
        fo.n = o.n;
        f = fo.make();
    }
    if (o.d == 1)
        r.csv.header({"x", "value"});
    else
        r.csv.header({"x", "y", "value"});
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (std::size_t i = 0; i < f.size(); ++i) {
        auto p = g.point(i);
        const double v = f[i].real();
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        if (o.d == 1)
            r.csv.row({Csv::cell(p[0]), Csv::cell(v)});
        else
            r.csv.row({Csv::cell(p[0]), Csv::cell(p[1]), Csv::cell(v)});
    }
    r.result["l2_norm"] = num(lp_norm(f, 2));
    r.result["min"] = num(lo);
    r.result["max"] = num(hi);
}

// zak --------------------------------------------------------------------

struct WindowOpts {
    std::string window = "gaussian";
    double T = 6;
    double beta = 0.3;

    void add(CLI::App* c) {
        c->add_option("--window", window, "gaussian | box | h_beta")->capture_default_str();
        c->add_option("--T", T, "truncation radius for the gaussian window")->capture_default_str();
        c->add_option("--beta", beta, "exponent for the h_beta window")->capture_default_str();
    }

    GaborWindow make() const {
        if (window == "gaussian") return gaussian_window(T);
        if (window == "box") return box_window();
        if (window == "h_beta") {
            const double b = beta;
            return GaborWindow{[b](double x) { return cplx(h_beta_value(b, x)); }, 0.5, 1e-12,
                               [b](double xi) { return cplx(h_beta_transform(b, xi)); }, "h_beta"};
        }
        throw PreconditionError("unknown window '" + window + "'");
    }
};

struct ZakOpts {
    WindowOpts w;
    int M = 256;
    std::vector<int> Ms{16, 32, 64, 128, 256};
};

void run_zak(const ZakOpts& o, const Global& g, Run& r) {
    auto w = o.w.make();
    auto Z = zak_transform(w, o.M, g.workers);
    const double qp = quasi_periodicity_residual(Z);
    auto u = unitarity(Z, w);
    auto m = min_modulus(Z);
    r.result["window"] = w.name;
    r.result["M"] = o.M;
    r.result["quasi_periodicity_residual"] = num(qp);
    r.result["zak_l2_norm"] = num(u.zak_norm);
    r.result["window_l2_norm"] = num(u.window_norm);
    r.result["unitarity_defect"] = num(u.defect);
    r.result["min_modulus"] = {{"x", num(m.x)}, {"y", num(m.y)}, {"value", num(m.modulus)}};
    r.result["zero_candidates"] = zero_candidates(Z).size();
    r.csv.header({"param", "value"});
    ScanSeries mins("min_modulus");
    for (int M : o.Ms) {
        const double v = min_modulus(zak_transform(w, M, g.workers)).modulus;
        mins.push(M, v);
        r.csv.row({std::to_string(M), Csv::cell(v)});
    }
    if (mins.size() >= 2) r.result["min_modulus_fit"] = fmcli::fit_json(loglog_fit(mins));
    r.verdict_ok = qp < 1e-8 && u.defect < 1e-6;
    r.result["invariants_pass"] = r.verdict_ok;
}

// gabor-blt --------------------------------------------------------------

struct BltOpts {
    WindowOpts w;
    std::vector<double> cq_qs{2};
    std::vector<int> Ns{4, 6, 8, 12};
    double q = 2;
    std::vector<double> time_exps{1, 2};
    std::vector<double> freq_exps{1, 2};
    int j0 = 2, j1 = 7;
};

void run_blt(const BltOpts& o, const Global& g, Run& r) {
    auto w = o.w.make();
    WeightedOptions wo;
    wo.seed = g.seed;
    wo.workers = g.workers;
    r.csv.header({"kind", "exponent", "param", "value"});
    ordered_json cq = ordered_json::array();
    for (double q : o.cq_qs) {
        auto s = gabor_cq_scan(w, q, o.Ns, wo);
        ordered_json pts = ordered_json::array();
        for (const auto& p : s.points)
            pts.push_back({{"D_ascent", num(p.D_ascent)}, {"D_structured", num(p.D_structured)},
                           {"D_certified", num(p.D_certified)}, {"lambda_min", num(p.lambda_min)}});
        cq.push_back({{"q", num(q)}, {"trend", to_string(s.trend)}, {"fit", fmcli::fit_json(s.fit)},
                      {"series", fmcli::series_json(s.series)}, {"points", pts}});
        for (std::size_t i = 0; i < s.series.size(); ++i)
            r.csv.row({"gabor_D", Csv::cell(q), Csv::cell(s.series.param[i]), Csv::cell(s.series.value[i])});
    }
    r.result["cq_scans"] = cq;
    if (!w.ghat) return;
    const auto Rs = dyadic(o.j0, o.j1, false);
    auto rep = blt_scan(w, o.q, o.time_exps, o.freq_exps, Rs, g.workers);
    auto side = [&](const std::vector<LocalizationVerdict>& v) {
        ordered_json a = ordered_json::array();
        for (const auto& x : v) a.push_back({{"t", num(x.t)}, {"report", fmcli::divergence_json(x.report)}});
        return a;
    };
    ordered_json pairs = ordered_json::array();
    for (const auto& p : rep.pairs)
        pairs.push_back({{"r", num(p.r)}, {"t", num(p.t)}, {"both_finite", p.both_finite}, {"forbidden", p.forbidden}});
    r.result["blt"] = {{"q", num(o.q)}, {"time", side(rep.time)}, {"freq", side(rep.freq)},
                       {"pairs", pairs}, {"forbidden_finite", rep.forbidden_finite}};
}

// gramian / sis-diagnostic -----------------------------------------------

struct GenOpts {
    std::vector<std::string> generators;
    int d = 1;
    int Kmax = 3;
    int n = 256;

    void add(CLI::App* c) {
        c->add_option("--generator", generators, "gaussian:w | indicator:a:b | hbeta:beta (repeatable)")->required();
        c->add_option("--d", d, "dimension")->capture_default_str();
        c->add_option("--Kmax", Kmax, "support radius of the generators' Fourier side")->capture_default_str();
        c->add_option("--n", n, "grid points per axis")->capture_default_str();
    }
};

struct GramianOpts {
    GenOpts gen;
    std::string lattice = "line:2";
    double rho = 1e-8;
};

void run_gramian(const GramianOpts& o, const Global& g, Run& r) {
    auto H = make_generators(o.gen.generators, o.gen.d, o.gen.Kmax);
    auto lat = parse_lattice(o.lattice);
    require(lat.d() == o.gen.d, "gramian: lattice dimension differs from --d");
    auto s = sample_generators(H, TorusGrid(o.gen.d, o.gen.n), g.workers);
    auto P = gramian(s);
    auto sub = sub_gramian(s, lat);
    const double resid = decomposition_residual(P, sub);
    auto rank = rank_formula_check(P, sub, o.rho);
    auto dom = ev_domination_check(P, sub, o.rho);
    r.result["lattice"] = rank.lattice;
    r.result["decomposition_residual"] = num(resid);
    r.result["rank_formula"] = {{"verdict", rank.verdict},       {"fraction", num(rank.fraction)},
                                {"sweep_fraction", nums(rank.sweep_fraction)},
                                {"J", rank.J},                   {"index", rank.index},
                                {"nontrivial", rank.nontrivial}, {"degenerate", rank.degenerate}};
    r.result["domination"] = {{"qualifying", dom.qualifying}, {"skipped", dom.skipped},
                              {"violations", dom.violations}, {"max_excess", num(dom.max_excess)}};
    r.csv.header({"x", "rank_P", "rank_sum", "lambda_max"});
    for (std::size_t i = 0; i < rank.samples.size(); ++i) {
        const auto& q = rank.samples[i];
        r.csv.row({Csv::cell(P.grid().point(i)[0]), std::to_string(q.rank_P), std::to_string(q.rank_sum),
                   Csv::cell(q.lambda_max)});
    }
    r.verdict_ok = resid < 1e-9 && dom.holds();
}

struct SisOpts {
    GenOpts gen;
    double q = 4;
    std::vector<int> Ns{8, 16, 32, 64};
    double s = 0;
    int sqrt_n = 4096;
    std::vector<int> sqrt_Ns{32, 64, 128, 256};
};

void run_sis(const SisOpts& o, const Global& g, Run& r) {
    auto H = make_generators(o.gen.generators, o.gen.d, o.gen.Kmax);
    WeightedOptions wo;
    wo.seed = g.seed;
    wo.workers = g.workers;
    auto rep = sis_cq_diagnostic(H, o.q, o.Ns, wo);
    r.result["q"] = num(o.q);
    r.result["trend"] = to_string(rep.trend);
    r.result["holds"] = rep.holds();
    r.result["fit"] = fmcli::fit_json(rep.fit);
    r.result["series"] = fmcli::series_json(rep.series);
    r.csv.header({"param", "value"});
    for (std::size_t i = 0; i < rep.series.size(); ++i)
        r.csv.row({Csv::cell(rep.series.param[i]), Csv::cell(rep.series.value[i])});
    if (o.s > 0) {
        auto gs = sample_generators(H, TorusGrid(o.gen.d, o.sqrt_n), g.workers);
        auto sq = sqrt_eigen_regularity_check(gs, o.s, o.sqrt_Ns, 10000, g.seed);
        ordered_json mem = ordered_json::array();
        for (const auto& m : sq.membership) mem.push_back(fmcli::divergence_json(m));
        r.result["sqrt_eigen"] = {{"s", num(o.s)}, {"pairs", sq.pairs}, {"max_excess", num(sq.max_excess)},
                                  {"bound_holds", sq.bound_holds}, {"membership", mem}};
        r.verdict_ok = sq.bound_holds;
    }
}

// zeroset ----------------------------------------------------------------

struct ZeroOpts {
    FieldOpts f;
    std::vector<int> js{3, 4, 5, 6, 7, 8};
    std::string schedule = "adaptive";
    double c0 = 0, theta = 0, kappa = 1.3;
    std::vector<double> qs;
    double sigma = 0, s = 0.75, r = 2;
};

void run_zeroset(const ZeroOpts& o, const Global& g, Run& r) {
    auto w = o.f.make();
    EpsSchedule sched;
    if (o.schedule == "fixed")
        sched = EpsSchedule::fixed(o.c0, o.theta);
    else if (o.schedule == "default-fixed")
        sched = EpsSchedule::default_fixed(w, o.s);
    else
        require(o.schedule == "adaptive", "zeroset: --schedule must be adaptive, fixed or default-fixed");
    sched.kappa = o.kappa;
    auto est = generalized_zero_set(w, o.js, sched);
    r.result["label"] = est.label;
    r.result["empty"] = est.empty;
    r.result["dimension"] = num(est.dimension);
    r.result["raw_slope"] = num(est.raw_slope);
    r.result["count_fit"] = fmcli::fit_json(est.count_fit);
    r.result["min_fit"] = fmcli::fit_json(est.min_fit);
    r.csv.header({"j", "tau", "eps", "count", "min_avg"});
    for (const auto& sc : est.scales)
        r.csv.row({std::to_string(sc.j), Csv::cell(sc.tau), Csv::cell(sc.eps), std::to_string(sc.count()),
                   Csv::cell(sc.min_avg)});
    if (o.qs.empty()) return;
    auto hs = hausdorff_obstruction_scan(w, o.sigma, o.s, o.r, o.qs, o.js, sched, g.workers);
    ordered_json entries = ordered_json::array();
    for (const auto& e : hs.entries)
        entries.push_back({{"q", num(e.q)}, {"exponent", num(e.exponent)}, {"verdict", to_string(e.verdict)}});
    r.result["hausdorff"] = {{"sigma", num(o.sigma)},
                             {"s", num(o.s)},
                             {"r", num(o.r)},
                             {"content_fit", fmcli::fit_json(hs.content_fit)},
                             {"seminorm_fit", fmcli::fit_json(hs.seminorm_fit)},
                             {"content_bounded_below", hs.content_bounded_below},
                             {"seminorm_vanishing", hs.seminorm_vanishing},
                             {"vacuous", hs.vacuous},
                             {"q_star", num(hs.q_star)},
                             {"q_alt", num(hs.q_alt)},
                             {"q_flip", hs.has_flip ? num(hs.q_flip) : ordered_json(nullptr)},
                             {"entries", entries}};
}

// fit --------------------------------------------------------------------

struct FitOpts {
    std::string series;
    std::string mode = "loglog";
};

void run_fit(const FitOpts& o, const Global&, Run& r) {
    auto s = fmcli::read_series(o.series);
    r.result["series"] = fmcli::series_json(s);
    auto f = loglog_fit(s);
    r.result["fit"] = fmcli::fit_json(f);
    if (o.mode == "divergence")
        r.result["divergence"] = fmcli::divergence_json(classify_divergence(s));
    else if (o.mode == "trend")
        r.result["trend"] = to_string(classify_trend(f));
    else
        require(o.mode == "loglog", "fit: --mode must be loglog, divergence or trend");
    r.csv.header({"param", "value", "fitted"});
    for (std::size_t i = 0; i < s.size(); ++i)
        r.csv.row({Csv::cell(s.param[i]), Csv::cell(s.value[i]),
                   Csv::cell(std::exp(f.intercept + f.slope * std::log(s.param[i])))});
}

ordered_json versions() {
    return {{"fmlab", version},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"boost", BOOST_LIB_VERSION},
            {"cli11", CLI11_VERSION},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"compiler", __VERSION__}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fmlab: Fourier multiplier and translate-system numerics"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "INI file with one [section] per subcommand");
    Global g;
    app.add_option("--out", g.out, "output directory")->capture_default_str();
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.add_option("--workers", g.workers, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_flag("--verbose", g.verbose, "progress on stderr");

    std::map<std::string, std::function<void(Run&)>> handlers;

    TransformOpts tr;
    auto* c_tr = app.add_subcommand("transform", "grid round-trip and Parseval checks, or coefficients of a field");
    tr.f.add(c_tr, "w_beta");
    c_tr->add_option("--mode", tr.mode, "random | field")->capture_default_str();
    c_tr->add_option("--N", tr.N, "frequency box half-width")->capture_default_str();
    c_tr->add_option("--trials", tr.trials, "random fields")->capture_default_str();
    c_tr->add_option("--tol", tr.tol, "relative tolerance")->capture_default_str();
    handlers["transform"] = [&](Run& r) { run_transform(tr, g, r); };

    SobolevOpts so;
    auto* c_so = app.add_subcommand("sobolev", "fractional seminorms of a construction or CSV samples");
    so.f.add(c_so, "w_beta");
    c_so->add_option("--s", so.s, "smoothness")->capture_default_str();
    c_so->add_option("--r", so.r, "integrability")->capture_default_str();
    c_so->add_option("--Ns", so.Ns, "partial-sum boxes")->capture_default_str();
    c_so->add_option("--aniso", so.aniso, "per-axis orders for the anisotropic seminorm");
    handlers["sobolev"] = [&](Run& r) { run_sobolev(so, g, r); };

    MultnormOpts mn;
    auto* c_mn = app.add_subcommand("multnorm", "truncated multiplier norms (scalar or K x K Hermitian)");
    mn.f.add(c_mn, "w_beta");
    c_mn->add_option("--symbol", mn.symbol, "const | random | any --field name")->capture_default_str();
    c_mn->add_option("--value", mn.value, "constant symbol value")->capture_default_str();
    c_mn->add_option("--N", mn.N, "operator box half-width")->capture_default_str();
    c_mn->add_option("--symbol-N", mn.symbol_N, "coefficient box of a random symbol")->capture_default_str();
    c_mn->add_option("--K", mn.K, "matrix size (>= 2 draws a random Hermitian field)")->capture_default_str();
    c_mn->add_option("--q", mn.qs, "target exponents for 2 -> q norms");
    c_mn->add_option("--restarts", mn.restarts, "ascent restarts")->capture_default_str();
    handlers["multnorm"] = [&](Run& r) { run_multnorm(mn, g, r); };

    TauOpts ta;
    auto* c_ta = app.add_subcommand("tau-scan", "L^2 mass of w near its zero against tau^{d(1-1/q)}");
    ta.f.n = 8192;
    ta.f.add(c_ta, "w_beta");
    c_ta->add_option("--q", ta.qs, "exponent grid")->capture_default_str();
    c_ta->add_option("--j0", ta.j0, "coarsest scale 2^-j0")->capture_default_str();
    c_ta->add_option("--j1", ta.j1, "finest scale 2^-j1")->capture_default_str();
    handlers["tau-scan"] = [&](Run& r) { run_tau(ta, g, r); };

    ConstructOpts co;
    auto* c_co = app.add_subcommand("construct", "emit samples of w_beta, h_beta, F_beta or the transform of h_beta");
    c_co->add_option("--kind", co.kind, "w_beta | h_beta | line_zero | F_beta | h_beta_hat")->capture_default_str();
    c_co->add_option("--beta", co.beta, "exponent")->capture_default_str();
    c_co->add_option("--d", co.d, "dimension")->capture_default_str();
    c_co->add_option("--n", co.n, "grid points per axis")->capture_default_str();
    c_co->add_option("--xi-max", co.xi_max, "largest frequency (h_beta_hat)")->capture_default_str();
    c_co->add_option("--xi-step", co.xi_step, "frequency spacing (h_beta_hat)")->capture_default_str();
    handlers["construct"] = [&](Run& r) { run_construct(co, g, r); };

    ZakOpts za;
    auto* c_za = app.add_subcommand("zak", "Zak transform invariants and zero localization");
    za.w.add(c_za);
    c_za->add_option("--M", za.M, "samples per axis")->capture_default_str();
    c_za->add_option("--Ms", za.Ms, "refinement sequence for the minimum modulus")->capture_default_str();
    handlers["zak"] = [&](Run& r) { run_zak(za, g, r); };

    BltOpts bl;
    auto* c_bl = app.add_subcommand("gabor-blt", "weighted (C_q) constants and time-frequency localization");
    bl.w.add(c_bl);
    c_bl->add_option("--cq-q", bl.cq_qs, "exponents for the weighted constant scan")->capture_default_str();
    c_bl->add_option("--Ns", bl.Ns, "box half-widths")->capture_default_str();
    c_bl->add_option("--q", bl.q, "exponent for the localization region")->capture_default_str();
    c_bl->add_option("--time-exps", bl.time_exps, "time-side exponents")->capture_default_str();
    c_bl->add_option("--freq-exps", bl.freq_exps, "frequency-side exponents")->capture_default_str();
    c_bl->add_option("--j0", bl.j0, "smallest radius 2^j0")->capture_default_str();
    c_bl->add_option("--j1", bl.j1, "largest radius 2^j1")->capture_default_str();
    handlers["gabor-blt"] = [&](Run& r) { run_blt(bl, g, r); };

    GramianOpts gr;
    auto* c_gr = app.add_subcommand("gramian", "Gramian decomposition, rank formula and eigenvalue domination");
    gr.gen.add(c_gr);
    c_gr->add_option("--lattice", gr.lattice, "line:m | diagonal:a:b | quincunx")->capture_default_str();
    c_gr->add_option("--rho", gr.rho, "relative rank threshold")->capture_default_str();
    handlers["gramian"] = [&](Run& r) { run_gramian(gr, g, r); };

    SisOpts si;
    auto* c_si = app.add_subcommand("sis-diagnostic", "weighted (C_q) constant of a translate system");
    si.gen.Kmax = 1;
    si.gen.add(c_si);
    c_si->add_option("--q", si.q, "exponent")->capture_default_str();
    c_si->add_option("--Ns", si.Ns, "box half-widths")->capture_default_str();
    c_si->add_option("--s", si.s, "run the sqrt-eigenvalue check at this order (0 skips)")->capture_default_str();
    c_si->add_option("--sqrt-n", si.sqrt_n, "grid for the sqrt-eigenvalue check")->capture_default_str();
    c_si->add_option("--sqrt-Ns", si.sqrt_Ns, "partial-sum boxes for the sqrt-eigenvalue check")->capture_default_str();
    handlers["sis-diagnostic"] = [&](Run& r) { run_sis(si, g, r); };

    ZeroOpts ze;
    auto* c_ze = app.add_subcommand("zeroset", "generalized zero set and the Hausdorff obstruction scan");
    ze.f.add(c_ze, "w_beta");
    c_ze->add_option("--js", ze.js, "dyadic scales 2^-j")->capture_default_str();
    c_ze->add_option("--schedule", ze.schedule, "adaptive | fixed | default-fixed")->capture_default_str();
    c_ze->add_option("--c0", ze.c0, "fixed schedule constant")->capture_default_str();
    c_ze->add_option("--theta", ze.theta, "fixed schedule exponent")->capture_default_str();
    c_ze->add_option("--kappa", ze.kappa, "adaptive threshold factor")->capture_default_str();
    c_ze->add_option("--q", ze.qs, "exponents for the obstruction scan (empty skips it)");
    c_ze->add_option("--sigma", ze.sigma, "Hausdorff dimension probed")->capture_default_str();
    c_ze->add_option("--s", ze.s, "smoothness")->capture_default_str();
    c_ze->add_option("--r", ze.r, "integrability")->capture_default_str();
    handlers["zeroset"] = [&](Run& r) { run_zeroset(ze, g, r); };

    FitOpts fi;
    auto* c_fi = app.add_subcommand("fit", "re-fit a stored series (CSV with param,value)");
    c_fi->add_option("--series", fi.series, "input CSV")->required();
    c_fi->add_option("--mode", fi.mode, "loglog | divergence | trend")->capture_default_str();
    handlers["fit"] = [&](Run& r) { run_fit(fi, g, r); };

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    Run run;
    try {
        log(g, "running " + name);
        handlers.at(name)(run);
    } catch (const PreconditionError& e) {
        std::cerr << "fmlab " << name << ": precondition: " << e.what() << '\n';
        return exit_precondition;
    } catch (const DomainError& e) {
        std::cerr << "fmlab " << name << ": domain: " << e.what() << '\n';
        return exit_precondition;
    } catch (const std::invalid_argument& e) {
        std::cerr << "fmlab " << name << ": invalid parameter: " << e.what() << '\n';
        return exit_usage;
    }

    // global options other than the output location, then the subcommand's
    std::string echo = "seed=" + std::to_string(g.seed) + "\nworkers=" + std::to_string(g.workers) + "\n[" + name + "]\n" +
                       sub->config_to_str(true, false);

    ordered_json doc;
    doc["subcommand"] = name;
    doc["status"] = run.verdict_ok ? "ok" : "verdict-failure";
    doc["result"] = run.result;
    doc["reproducibility"] = {{"seed", g.seed},
                              {"workers", g.workers},
                              {"config", echo},
                              {"versions", versions()}};
    std::filesystem::create_directories(g.out);
    const auto dir = std::filesystem::path(g.out);
    std::ofstream(dir / "result.json") << doc.dump(2) << '\n';
    if (!run.csv.empty()) run.csv.write(dir / "series.csv");
    log(g, "wrote " + (dir / "result.json").string());
    if (g.verbose) std::cerr << run.result.dump(2) << '\n';
    return run.verdict_ok ? exit_ok : exit_verdict;
}
