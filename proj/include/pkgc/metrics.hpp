#pragma once
// Completion curves and the two progressive metrics.
//
// MOAR compares the area gained above the initial completion ratio by the
// actual curve with the area gained by the ideal curve (a verifier that
// accepts every proposal until the held-out facts run out). Both areas are
// trapezoid sums over integer steps 0..n_s, computed on fact counts so that
// simple constructions give exact ratios.

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pkgc/errors.hpp"
#include "pkgc/verifier.hpp"

namespace pkgc {

struct CompletionCurve {
    std::size_t total = 0;  // |F_known initial| + |F_un initial|
    std::vector<CurvePoint> points;

    static CompletionCurve start(std::size_t known, std::size_t total) {
        CompletionCurve c;
        c.total = total;
        c.points.push_back({0, 0, 0, known, ratio(known, total)});
        return c;
    }

    static double ratio(std::size_t known, std::size_t total) {
        return total ? static_cast<double>(known) / static_cast<double>(total) : 0.0;
    }

    void append(std::size_t candidates, std::size_t accepted, std::size_t known) {
        points.push_back({points.size(), candidates, accepted, known, ratio(known, total)});
    }

    [[nodiscard]] double rho() const { return points.empty() ? 0.0 : points.front().completion_ratio; }
    [[nodiscard]] std::size_t last_step() const { return points.empty() ? 0 : points.back().step; }
};

inline void check_monotone(const CompletionCurve& curve) {
    for (std::size_t i = 1; i < curve.points.size(); ++i)
        if (curve.points[i].known < curve.points[i - 1].known)
            throw std::logic_error("completion curve decreases at step " + std::to_string(curve.points[i].step));
}

// S1 / (S1 + S2). The actual curve is held flat after its last point when it
// ended early. Returns 0 when the ideal area is 0 (including n_s = 0).
inline double moar(const CompletionCurve& curve, std::size_t n_c, std::size_t n_s) {
    if (curve.points.empty()) throw std::invalid_argument("moar: empty curve");
    check_monotone(curve);
    const std::size_t k0 = curve.points.front().known;
    if (curve.total < k0) throw std::invalid_argument("moar: curve total smaller than initial known count");
    const std::size_t unexplored = curve.total - k0;

    auto actual = [&](std::size_t i) {
        const auto& p = i < curve.points.size() ? curve.points[i] : curve.points.back();
        return static_cast<double>(p.known - k0);
    };
    auto ideal = [&](std::size_t i) { return static_cast<double>(std::min(i * n_c, unexplored)); };

    double area_actual = 0, area_ideal = 0;
    for (std::size_t i = 0; i < n_s; ++i) {
        area_actual += (actual(i) + actual(i + 1)) / 2;
        area_ideal += (ideal(i) + ideal(i + 1)) / 2;
    }
    return area_ideal > 0 ? area_actual / area_ideal : 0.0;
}

// Completion ratio after step k.
inline double cr_at_k(const CompletionCurve& curve, std::size_t k) {
    if (k >= curve.points.size())
        throw std::out_of_range("cr_at_k: step " + std::to_string(k) + " beyond curve of " +
                                std::to_string(curve.points.size()) + " points");
    return curve.points[k].completion_ratio;
}

inline void write_curve_csv(std::ostream& out, const CompletionCurve& curve) {
    out << "step,candidates,accepted,known,completion_ratio\n";
    char buf[160];
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%zu,%.12f\n", p.step, p.candidates, p.accepted, p.known,
                      p.completion_ratio);
        out << buf;
    }
}

inline CompletionCurve read_curve_csv(std::istream& in, std::size_t total) {
    CompletionCurve curve;
    curve.total = total;
    std::string line;
    if (!std::getline(in, line)) throw DataError("curve file is empty");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        CurvePoint p;
        char c1, c2, c3, c4;
        std::istringstream ss(line);
        if (!(ss >> p.step >> c1 >> p.candidates >> c2 >> p.accepted >> c3 >> p.known >> c4))
            throw ParseError("curve.csv", lineno, "malformed curve row");
        p.completion_ratio = CompletionCurve::ratio(p.known, total);
        curve.points.push_back(p);
    }
    return curve;
}

}  // namespace pkgc
