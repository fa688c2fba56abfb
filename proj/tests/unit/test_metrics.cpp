#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "spliceloc/compression_type.hpp"
#include "spliceloc/error.hpp"
#include "spliceloc/metrics/metrics.hpp"

using namespace spliceloc;
using namespace spliceloc::metrics;

namespace {

std::vector<std::uint8_t> bits(unsigned v, int n = 8) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = (v >> i) & 1u;
    return out;
}

// brute-force set computations
std::set<int> ones(const std::vector<std::uint8_t>& v) {
    std::set<int> s;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i]) s.insert(static_cast<int>(i));
    return s;
}

double oracle_jaccard(const std::vector<std::uint8_t>& y, const std::vector<std::uint8_t>& p) {
    const auto a = ones(y), b = ones(p);
    std::set<int> i, u;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(i, i.end()));
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::inserter(u, u.end()));
    return u.empty() ? 100.0 : 100.0 * static_cast<double>(i.size()) / static_cast<double>(u.size());
}

double oracle_f1(const std::vector<std::uint8_t>& y, const std::vector<std::uint8_t>& p) {
    double tp = 0, pp = 0, ap = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        tp += y[i] && p[i];
        pp += p[i];
        ap += y[i];
    }
    if (pp == 0 || ap == 0) return 0.0;
    const double P = tp / pp, R = tp / ap;
    return P + R == 0 ? 0.0 : 100.0 * 2 * P * R / (P + R);
}

double oracle_bacc(const std::vector<std::uint8_t>& y, const std::vector<std::uint8_t>& p) {
    double tp = 0, pos = 0, tn = 0, neg = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i]) {
            ++pos;
            tp += p[i];
        } else {
            ++neg;
            tn += !p[i];
        }
    }
    return 100.0 * (tp / pos + tn / neg) / 2;
}

}  // namespace

TEST_CASE("metric examples") {
    CHECK(jaccard(std::vector<std::uint8_t>{1, 0, 1, 0}, std::vector<std::uint8_t>{1, 0, 1, 0}).value == 100.0);
    CHECK(round2(jaccard(std::vector<std::uint8_t>{1, 1, 0, 0}, std::vector<std::uint8_t>{1, 0, 1, 0}).value) == 33.33);
    CHECK(round2(f1(std::vector<std::uint8_t>{1, 0}, std::vector<std::uint8_t>{1, 1}).value) == 66.67);
    CHECK(balanced_accuracy(std::vector<std::uint8_t>{0, 0, 1, 1}, std::vector<std::uint8_t>{0, 1, 1, 1}).value == 75.0);
    const std::vector<std::uint8_t> z{0, 0, 0};
    const auto j = jaccard(z, z);
    CHECK(j.value == 100.0);
    CHECK(j.degenerate);
    CHECK(f1(z, z).degenerate);
    CHECK_THROWS_AS(jaccard(z, std::vector<std::uint8_t>{0, 0}), Error);
    CHECK_THROWS_AS(f1(z, std::vector<std::uint8_t>{0}), Error);
    CHECK_THROWS_AS(balanced_accuracy(z, std::vector<std::uint8_t>{}), Error);
}

TEST_CASE("exhaustive length-8 agreement with set oracles") {
    for (unsigned a = 0; a < 256; ++a) {
        const auto y = bits(a);
        for (unsigned b = 0; b < 256; ++b) {
            const auto p = bits(b);
            const auto J = jaccard(y, p), F = f1(y, p), B = balanced_accuracy(y, p);
            REQUIRE(J.value == doctest::Approx(oracle_jaccard(y, p)).epsilon(1e-12));
            REQUIRE(F.value == doctest::Approx(oracle_f1(y, p)).epsilon(1e-12));
            if (a != 0 && a != 255) {
                REQUIRE(!B.degenerate);
                REQUIRE(B.value == doctest::Approx(oracle_bacc(y, p)).epsilon(1e-12));
            } else {
                REQUIRE(B.degenerate);
            }
            if (!(a == 0 && b == 0)) REQUIRE(J.value <= F.value + 1e-12);  // both-empty: J = 100 by convention, F1 degenerate
            const auto c = confusion(y, p);
            REQUIRE(c.total() == 8);
            for (const auto* s : {&J, &F, &B}) {
                REQUIRE(s->value >= 0.0);
                REQUIRE(s->value <= 100.0);
            }
        }
    }
}

TEST_CASE("scores are permutation invariant") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        auto y = bits(rng() & 0xFFFu, 12), p = bits(rng() & 0xFFFu, 12);
        std::vector<int> idx(12);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<std::uint8_t> y2(12), p2(12);
        for (int i = 0; i < 12; ++i) {
            y2[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
            p2[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
        }
        CHECK(jaccard(y, p).value == jaccard(y2, p2).value);
        CHECK(f1(y, p).value == f1(y2, p2).value);
        CHECK(balanced_accuracy(y, p).value == balanced_accuracy(y2, p2).value);
    }
}

TEST_CASE("flipping a correct prediction never raises a score") {
    for (unsigned a = 0; a < 256; a += 3) {
        const auto y = bits(a);
        for (unsigned b = 0; b < 256; b += 5) {
            const auto p = bits(b);
            for (std::size_t i = 0; i < 8; ++i) {
                if (p[i] != y[i]) continue;
                auto worse = p;
                worse[i] ^= 1u;
                CHECK(jaccard(y, worse).value <= jaccard(y, p).value);
                CHECK(f1(y, worse).value <= f1(y, p).value);
                CHECK(balanced_accuracy(y, worse).value <= balanced_accuracy(y, p).value);
            }
        }
    }
}

TEST_CASE("grouped recall") {
    // last type C64 (code 0): 3 of 4 correct; V2 (code 7): 1 of 2 correct
    std::vector<FrameTruth> truth;
    std::vector<std::uint8_t> pred;
    for (int i = 0; i < 4; ++i) {
        truth.push_back({1, 2, 0});
        pred.push_back(i < 3 ? 1 : 0);
    }
    for (int i = 0; i < 2; ++i) {
        truth.push_back({1, 3, 7});
        pred.push_back(i == 0 ? 1 : 0);
    }
    for (int i = 0; i < 5; ++i) {
        truth.push_back({0, 1, 2});
        pred.push_back(0);
    }
    const auto t = grouped_recall(truth, pred);
    REQUIRE(t.by_last_type.size() == 12);
    CHECK(t.by_last_type[0].group == "C64");
    CHECK(t.by_last_type[0].recall() == 75.0);
    CHECK(t.by_last_type[7].group == "V2");
    CHECK(t.by_last_type[7].recall() == 50.0);
    CHECK(t.by_last_type[2].empty);  // single-compressed frames do not enter
    REQUIRE(t.by_count.size() == 4);
    CHECK(t.by_count[0].group == "Single");
    CHECK(t.by_count[0].recall() == 100.0);
    CHECK(t.by_count[1].group == "Double");
    CHECK(t.by_count[1].recall() == 75.0);
    CHECK(t.by_count[2].group == "Triple");
    CHECK(t.by_count[2].recall() == 50.0);
    CHECK(t.by_count[3].group == "Overall");
    CHECK(round2(t.by_count[3].recall()) == 66.67);
}

TEST_CASE("report output") {
    std::vector<FrameTruth> truth{{0, 1, 0}, {1, 2, 2}, {1, 3, 11}, {0, 1, 6}};
    std::vector<std::uint8_t> pred{0, 1, 0, 1};
    const auto r = evaluate(truth, pred);
    CHECK(r.confusion.total() == 4);
    const auto text = r.to_tables();
    CHECK(text.find("Single  Double  Triple Overall") != std::string::npos);
    CHECK(text.find("C64") != std::string::npos);
    CHECK(text.find("V6") != std::string::npos);
    const auto json = r.to_json();
    CHECK(json.find("\"balanced_accuracy\"") != std::string::npos);
    CHECK(json.find("concatenated") != std::string::npos);
}

TEST_CASE("compression type codes") {
    CHECK(type_code(RateMode::cbr, 64) == 0);
    CHECK(type_code(RateMode::cbr, 256) == 5);
    CHECK(type_code(RateMode::vbr, 1) == 6);
    CHECK(type_code(RateMode::vbr, 6) == 11);
    CHECK(!type_code(RateMode::cbr, 100));
    CHECK(type_name(3) == "C160");
    CHECK(type_name(9) == "V4");
}
