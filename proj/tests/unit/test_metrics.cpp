#include <gtest/gtest.h>

#include <sstream>

#include "pkgc/metrics.hpp"

using namespace pkgc;

namespace {

// known_0 = 100 of 1100 total, n_c = 10 per step, so the ideal curve never
// saturates within 20 steps.
CompletionCurve curve_with_gain(std::size_t per_step, std::size_t steps) {
    auto c = CompletionCurve::start(100, 1100);
    std::size_t known = 100;
    for (std::size_t i = 1; i <= steps; ++i) {
        known += per_step;
        c.append(10, per_step, known);
    }
    return c;
}

}  // namespace

TEST(Moar, IdealCurveScoresOne) { EXPECT_DOUBLE_EQ(moar(curve_with_gain(10, 20), 10, 20), 1.0); }

TEST(Moar, FlatCurveScoresZero) { EXPECT_DOUBLE_EQ(moar(curve_with_gain(0, 20), 10, 20), 0.0); }

TEST(Moar, HalfSlopeScoresHalf) { EXPECT_DOUBLE_EQ(moar(curve_with_gain(5, 20), 10, 20), 0.5); }

// Ideal saturates: 25 unexplored facts, n_c = 10. Ideal gains 10, 20, 25, 25;
// trapezoids 5 + 15 + 22.5 + 25 = 67.5. Actual gains 10, 20, 25, 25 too.
TEST(Moar, SaturatingIdeal) {
    auto c = CompletionCurve::start(75, 100);
    c.append(10, 10, 85);
    c.append(10, 10, 95);
    c.append(10, 5, 100);
    c.append(10, 0, 100);
    EXPECT_DOUBLE_EQ(moar(c, 10, 4), 1.0);
}

// A curve that ends early is held flat: gains 10 then nothing over 4 steps.
// Actual area 5 + 10 + 10 + 10 = 35; ideal 5 + 15 + 25 + 35 = 80.
TEST(Moar, EarlyEndHeldFlat) {
    auto c = CompletionCurve::start(0, 1000);
    c.append(10, 10, 10);
    EXPECT_DOUBLE_EQ(moar(c, 10, 4), 35.0 / 80.0);
}

TEST(Moar, NothingToFindScoresZero) {
    auto c = CompletionCurve::start(50, 50);
    c.append(10, 0, 50);
    EXPECT_DOUBLE_EQ(moar(c, 10, 1), 0.0);
    EXPECT_DOUBLE_EQ(moar(c, 10, 0), 0.0);
}

TEST(Moar, RejectsDecreasingCurve) {
    auto c = CompletionCurve::start(50, 100);
    c.append(10, 0, 40);
    EXPECT_THROW(moar(c, 10, 1), std::logic_error);
}

TEST(CrAtK, StepZeroIsRhoExactly) {
    const auto c = curve_with_gain(5, 3);
    EXPECT_EQ(cr_at_k(c, 0), 100.0 / 1100.0);
    EXPECT_EQ(cr_at_k(c, 0), c.rho());
    EXPECT_DOUBLE_EQ(cr_at_k(c, 3), 115.0 / 1100.0);
    EXPECT_THROW(cr_at_k(c, 4), std::out_of_range);
}

TEST(CurveCsv, RoundTripAndFormat) {
    const auto c = curve_with_gain(7, 3);
    std::stringstream io;
    write_curve_csv(io, c);
    const std::string text = io.str();
    EXPECT_EQ(text.rfind("step,candidates,accepted,known,completion_ratio\n0,0,0,100,", 0), 0u);
    const auto back = read_curve_csv(io, 1100);
    EXPECT_EQ(back.points, c.points);
}
