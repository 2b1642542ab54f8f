#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmlab/fmlab.hpp"

namespace fmcli {

using nlohmann::ordered_json;

// Non-finite doubles have no JSON literal; they are written as strings.
inline ordered_json num(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

inline ordered_json nums(const std::vector<double>& v) {
    ordered_json a = ordered_json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

inline ordered_json fit_json(const fmlab::ExponentFit& f) {
    return {{"slope", num(f.slope)},
            {"intercept", num(f.intercept)},
            {"r_squared", num(f.r_squared)},
            {"slope_stderr", num(f.slope_stderr)},
            {"n_points", f.n_points}};
}

inline ordered_json series_json(const fmlab::ScanSeries& s) {
    return {{"label", s.label}, {"param", nums(s.param)}, {"value", nums(s.value)}, {"zero_params", nums(s.zero_params)}};
}

inline ordered_json divergence_json(const fmlab::DivergenceReport& r) {
    ordered_json j{{"verdict", fmlab::to_string(r.verdict)}, {"mode", r.mode}, {"growth", fit_json(r.growth)}};
    if (r.has_increment) j["increment"] = fit_json(r.increment);
    return j;
}

inline ordered_json vec_json(const fmlab::Vec& v) {
    ordered_json re = ordered_json::array(), im = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        re.push_back(num(v[i].real()));
        im.push_back(num(v[i].imag()));
    }
    return {{"re", re}, {"im", im}};
}

// Plot-ready table: header row, '.' decimal, ',' separator.
class Csv {
public:
    void header(std::vector<std::string> cols) { cols_ = std::move(cols); }
    void row(const std::vector<std::string>& cells) { rows_.push_back(cells); }
    bool empty() const { return cols_.empty(); }

    static std::string cell(double x) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return buf;
    }

    void write(const std::filesystem::path& p) const {
        std::ofstream f(p);
        auto line = [&](const std::vector<std::string>& v) {
            for (std::size_t i = 0; i < v.size(); ++i) f << (i ? "," : "") << v[i];
            f << '\n';
        };
        line(cols_);
        for (const auto& r : rows_) line(r);
    }

private:
    std::vector<std::string> cols_;
    std::vector<std::vector<std::string>> rows_;
};

struct Table {
    std::vector<std::string> cols;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < cols.size(); ++i)
            if (cols[i] == name) return int(i);
        return -1;
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) {
        while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
        while (!c.empty() && c.front() == ' ') c.erase(c.begin());
        out.push_back(c);
    }
    return out;
}

inline Table read_csv(const std::string& path) {
    std::ifstream f(path);
    fmlab::require(bool(f), "cannot open CSV file " + path);
    Table t;
    std::string line;
    fmlab::require(bool(std::getline(f, line)), "CSV file " + path + " is empty");
    t.cols = split_csv_line(line);
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        fmlab::require(cells.size() == t.cols.size(), path + ":" + std::to_string(lineno) + ": wrong column count");
        std::vector<double> r;
        for (const auto& c : cells) {
            try {
                std::size_t used = 0;
                r.push_back(std::stod(c, &used));
                fmlab::require(used == c.size(), "");
            } catch (const std::exception&) {
                throw fmlab::PreconditionError(path + ":" + std::to_string(lineno) + ": not a number: " + c);
            }
        }
        t.rows.push_back(std::move(r));
    }
    return t;
}

// Samples in grid order from a CSV with a `value` column and an optional
// `value_im` column; n is inferred from the row count.
inline fmlab::SampleField read_samples(const std::string& path, int d) {
    auto t = read_csv(path);
    const int re = t.column("value"), im = t.column("value_im");
    fmlab::require(re >= 0, "CSV samples need a 'value' column");
    const std::size_t m = t.rows.size();
    const int n = d == 1 ? int(m) : int(std::lround(std::sqrt(double(m))));
    fmlab::require(std::size_t(d == 1 ? n : n * n) == m, "CSV sample count is not n^d");
    fmlab::SampleField f(fmlab::TorusGrid(d, n));
    for (std::size_t i = 0; i < m; ++i) f.values[i] = fmlab::cplx(t.rows[i][re], im >= 0 ? t.rows[i][im] : 0.0);
    return f;
}

inline fmlab::ScanSeries read_series(const std::string& path) {
    auto t = read_csv(path);
    const int p = t.column("param"), v = t.column("value");
    fmlab::require(p >= 0 && v >= 0, "series CSV needs 'param' and 'value' columns");
    fmlab::ScanSeries s(std::filesystem::path(path).stem().string());
    for (const auto& r : t.rows) s.push(r[p], r[v]);
    return s;
}

}  // namespace fmcli
