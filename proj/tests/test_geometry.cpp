#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "dimenet/verify.hpp"
#include "doctest.h"

using namespace dimenet;

namespace {

const double kPi = std::acos(-1.0);

Molecule hexagon(double side) {
    // Regular hexagon in the xy-plane; circumradius equals the side.
    Molecule m;
    for (int k = 0; k < 6; ++k) {
        const double a = kPi / 3.0 * k;
        m.z.push_back(6);
        m.positions.push_back({side * std::cos(a), side * std::sin(a), 0.0});
    }
    return m;
}

Molecule triangle(double side) {
    Molecule m;
    m.z = {6, 6, 6};
    m.positions = {{0, 0, 0}, {side, 0, 0}, {side / 2, side * std::sqrt(3.0) / 2.0, 0}};
    return m;
}

}  // namespace

TEST_CASE("angle: collinear through the middle atom is pi") {
    CHECK(compute_angle({-1, 0, 0}, {0, 0, 0}, {2, 0, 0}) == doctest::Approx(kPi).epsilon(1e-12));
}

TEST_CASE("angle: perpendicular unit vectors give pi/2") {
    CHECK(compute_angle({1, 0, 0}, {0, 0, 0}, {0, 1, 0}) == doctest::Approx(kPi / 2).epsilon(1e-12));
}

TEST_CASE("angle: construct-then-measure round trip at 104.52 degrees") {
    const double a = 104.52 * kPi / 180.0;
    const std::array<double, 3> h1{0.9572, 0, 0};
    const std::array<double, 3> h2{0.9572 * std::cos(a), 0.9572 * std::sin(a), 0};
    CHECK(compute_angle(h1, {0, 0, 0}, h2) == doctest::Approx(a).epsilon(1e-12));
}

TEST_CASE("angle: clamp keeps nearly-collinear vectors finite") {
    // Numerically |cos| can exceed 1; result must be a number in [0, pi].
    const double ang = compute_angle({1.0, 1e-9, 0}, {0, 0, 0}, {2.0, 2e-9, 0});
    CHECK(std::isfinite(ang));
    CHECK(ang >= 0.0);
    CHECK(ang <= kPi);
}

TEST_CASE("graph: hexagon with side 1.5 at cutoff 2.5") {
    // Second-neighbor distance 1.5*sqrt(3) ~ 2.598 exceeds the cutoff.
    DirectedGraph g = build_graph(hexagon(1.5), 2.5);
    CHECK(g.num_edges() == 12);
    CHECK(g.num_triplets() == 12);
    std::vector<int> in_degree(6, 0);
    for (const Edge& e : g.edges) in_degree[static_cast<std::size_t>(e.dst)]++;
    for (int deg : in_degree) CHECK(deg == 2);
    for (double a : g.angle) CHECK(a == doctest::Approx(2.0 * kPi / 3.0).epsilon(1e-12));
    for (double d : g.dist) CHECK(d == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("graph: two atoms beyond the cutoff produce an empty graph") {
    Molecule m;
    m.z = {1, 1};
    m.positions = {{0, 0, 0}, {6, 0, 0}};
    DirectedGraph g = build_graph(m, 5.0);
    CHECK(g.num_edges() == 0);
    CHECK(g.num_triplets() == 0);
}

TEST_CASE("graph: equilateral triangle") {
    DirectedGraph g = build_graph(triangle(1.5), 2.5);
    CHECK(g.num_edges() == 6);
    CHECK(g.num_triplets() == 6);
    for (double a : g.angle) CHECK(a == doctest::Approx(kPi / 3.0).epsilon(1e-12));
}

TEST_CASE("graph: boundary distance d == c is included") {
    Molecule m;
    m.z = {1, 1};
    m.positions = {{0, 0, 0}, {2.5, 0, 0}};
    CHECK(build_graph(m, 2.5).num_edges() == 2);
}

TEST_CASE("graph: coincident atoms are rejected") {
    Molecule m;
    m.z = {1, 1};
    m.positions = {{0, 0, 0}, {0, 0, 1e-9}};
    CHECK_THROWS(build_graph(m, 5.0));
}

TEST_CASE("graph: deterministic edge and triplet ordering") {
    std::mt19937_64 rng(21);
    Molecule m = random_molecule(rng, 7);
    DirectedGraph g = build_graph(m, 5.0);
    for (std::size_t i = 1; i < g.edges.size(); ++i) {
        const Edge &a = g.edges[i - 1], &b = g.edges[i];
        CHECK((a.dst < b.dst || (a.dst == b.dst && a.src < b.src)));
    }
    for (std::size_t i = 1; i < g.triplets.size(); ++i) {
        const Triplet &a = g.triplets[i - 1], &b = g.triplets[i];
        CHECK((a.ji < b.ji || (a.ji == b.ji && a.kj < b.kj)));
    }
}

TEST_CASE("graph: edge set symmetric, distances within cutoff, triplets chain with k != i") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 8; ++trial) {
        Molecule m = random_molecule(rng, 3 + trial);
        DirectedGraph g = build_graph(m, 3.0);
        std::set<std::pair<int, int>> pairs;
        for (const Edge& e : g.edges) pairs.insert({e.src, e.dst});
        for (const Edge& e : g.edges) CHECK(pairs.count({e.dst, e.src}) == 1);
        for (double d : g.dist) {
            CHECK(d > 0.0);
            CHECK(d <= 3.0);
        }
        for (const Triplet& t : g.triplets) {
            const Edge& kj = g.edges[static_cast<std::size_t>(t.kj)];
            const Edge& ji = g.edges[static_cast<std::size_t>(t.ji)];
            CHECK(kj.dst == ji.src);   // shared middle atom j
            CHECK(kj.src != ji.dst);   // k != i
        }
    }
}

TEST_CASE("graph: triplets match a brute-force triple loop") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 6; ++trial) {
        Molecule m = random_molecule(rng, 3 + trial % 4);
        DirectedGraph g = build_graph(m, 3.5);
        std::set<std::tuple<int, int, int>> got;  // (k, j, i)
        for (const Triplet& t : g.triplets) {
            const Edge& kj = g.edges[static_cast<std::size_t>(t.kj)];
            const Edge& ji = g.edges[static_cast<std::size_t>(t.ji)];
            got.insert({kj.src, kj.dst, ji.dst});
        }
        std::set<std::tuple<int, int, int>> expect;
        auto dist = [&](int a, int b) {
            double s = 0;
            for (int c = 0; c < 3; ++c) {
                const double d = m.positions[static_cast<std::size_t>(a)][static_cast<std::size_t>(c)] -
                                 m.positions[static_cast<std::size_t>(b)][static_cast<std::size_t>(c)];
                s += d * d;
            }
            return std::sqrt(s);
        };
        for (int k = 0; k < m.size(); ++k)
            for (int j = 0; j < m.size(); ++j)
                for (int i = 0; i < m.size(); ++i) {
                    if (k == j || j == i || k == i) continue;
                    if (dist(k, j) <= 3.5 && dist(j, i) <= 3.5) expect.insert({k, j, i});
                }
        CHECK(got == expect);
    }
}

TEST_CASE("graph: rigid-motion invariance of distances and angles") {
    std::mt19937_64 rng(9);
    Molecule m = random_molecule(rng, 8);
    DirectedGraph g0 = build_graph(m, 4.0);
    const auto rot = random_rotation(rng);
    Molecule mt = transform(m, rot, {3.0, -2.0, 11.0});
    DirectedGraph g1 = build_graph(mt, 4.0);
    REQUIRE(g0.num_edges() == g1.num_edges());
    REQUIRE(g0.num_triplets() == g1.num_triplets());
    for (std::size_t e = 0; e < g0.edges.size(); ++e) {
        CHECK(g0.edges[e].src == g1.edges[e].src);
        CHECK(g0.edges[e].dst == g1.edges[e].dst);
        CHECK(std::abs(g0.dist[e] - g1.dist[e]) <= 1e-10);
    }
    for (std::size_t t = 0; t < g0.angle.size(); ++t) CHECK(std::abs(g0.angle[t] - g1.angle[t]) <= 1e-10);
}

TEST_CASE("graph: permutation yields relabeled graph with identical multisets") {
    std::mt19937_64 rng(13);
    Molecule m = random_molecule(rng, 6);
    std::vector<int> perm{3, 0, 5, 1, 4, 2};
    DirectedGraph g0 = build_graph(m, 4.0);
    DirectedGraph g1 = build_graph(permute(m, perm), 4.0);
    REQUIRE(g0.num_edges() == g1.num_edges());
    REQUIRE(g0.num_triplets() == g1.num_triplets());
    auto sorted = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    const auto d0 = sorted(g0.dist), d1 = sorted(g1.dist);
    for (std::size_t i = 0; i < d0.size(); ++i) CHECK(std::abs(d0[i] - d1[i]) <= 1e-10);
    const auto a0 = sorted(g0.angle), a1 = sorted(g1.angle);
    for (std::size_t i = 0; i < a0.size(); ++i) CHECK(std::abs(a0[i] - a1[i]) <= 1e-10);
}

TEST_CASE("molecule: validation rejects bad input") {
    Molecule empty;
    CHECK_THROWS(empty.validate());
    Molecule bad;
    bad.z = {0};
    bad.positions = {{0, 0, 0}};
    CHECK_THROWS(bad.validate());
}
