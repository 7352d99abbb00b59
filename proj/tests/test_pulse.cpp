#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qrsim/constants.hpp"
#include "qrsim/pulse.hpp"

#include <cmath>
#include <set>

using namespace qrsim;
using constants::ghz;

namespace {

rabi::DressedSite make_site(double g_over_wr, char tag, int n_kept, double pl, double pr,
                            int n_fock = 40) {
    rabi::QrsParams p;
    p.omega_r = ghz(10.0);
    p.omega_q = ghz(9.0);
    p.g = g_over_wr * p.omega_r;
    p.n_fock = n_fock;
    p.species = tag;
    return rabi::make_dressed_site(p, n_kept, pl, pr);
}

struct Pair {
    rabi::DressedSite a, b;
    Pair(double pval = 3.655e7, int n_kept = 4)
        : a(make_site(0.6, 'A', n_kept, 0.0, pval)),
          b(make_site(0.9, 'B', n_kept, pval, 0.0)) {}
};

constexpr double kQ = 3.655e7;

// Envelope wide enough for the published protocol strengths.
pulse::RwaPolicy relaxed_policy() {
    pulse::RwaPolicy pol;
    pol.guard_factor = 10.0;
    pol.ratio_max = 2.0;
    pol.drive_guard_factor = 50.0;
    return pol;
}

} // namespace

TEST_CASE("gap table carries the definition identities") {
    Pair pair;
    const auto table = pulse::build_gap_table(pair.a, pair.b);

    const double wa10 = pair.a.gap(1, 0);
    const double wb10 = pair.b.gap(1, 0);
    CHECK(table.delta(1, 0, 1, 0) == doctest::Approx(wb10 + wa10).epsilon(1e-14));
    CHECK(table.big_delta(1, 0, 1, 0) ==
          doctest::Approx(std::abs(wb10 - wa10)).epsilon(1e-14));
    CHECK(table.big_delta(1, 0, 1, 0) >= 0.0);
    CHECK(table.delta(2, 1, 2, 1) > 0.0);
}

TEST_CASE("identical species collapse the difference gap and compilation refuses") {
    const auto a1 = make_site(0.6, 'A', 4, 0.0, kQ);
    const auto a2 = make_site(0.6, 'B', 4, kQ, 0.0);  // same spectrum, other tag
    const auto table = pulse::build_gap_table(a1, a2);
    CHECK(table.big_delta(1, 0, 1, 0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    pulse::PulseCompiler compiler(a1, a2, kQ, kQ);
    CHECK_THROWS(compiler.compile_xy(0.01));
}

TEST_CASE("xy compilation: four distinct positive tones, amplitude ratios") {
    Pair pair;
    pulse::PulseCompiler compiler(pair.a, pair.b, kQ, kQ);
    const double f = 0.05;
    const auto gate = compiler.compile_xy(f);

    REQUIRE(gate.signal.tones.size() == 4);
    std::set<double> omegas;
    for (const auto& tone : gate.signal.tones) {
        CHECK(tone.omega > 0.0);
        omegas.insert(tone.omega);
    }
    CHECK(omegas.size() == 4);

    // gamma_1 / gamma_4 = (chi_21^A chi_21^B)/(chi_10^A chi_10^B)
    const double ratio = gate.signal.tones[0].amplitude / gate.signal.tones[3].amplitude;
    const double expect = (pair.a.chi(2, 1) * pair.b.chi(2, 1)) /
                          (pair.a.chi(1, 0) * pair.b.chi(1, 0));
    CHECK(ratio == doctest::Approx(expect).epsilon(1e-12));

    CHECK(gate.strength == doctest::Approx(f * kQ).epsilon(1e-14));

    // Each compiled frequency appears bit-for-bit in the gap table.
    CHECK(gate.signal.tones[0].omega == compiler.gaps().big_delta(1, 0, 1, 0));
    CHECK(gate.signal.tones[1].omega == compiler.gaps().big_delta(1, 0, 2, 1));
    CHECK(gate.signal.tones[2].omega == compiler.gaps().big_delta(2, 1, 1, 0));
    CHECK(gate.signal.tones[3].omega == compiler.gaps().big_delta(2, 1, 2, 1));
}

TEST_CASE("f = 0 compiles to the identity signal") {
    Pair pair;
    pulse::PulseCompiler compiler(pair.a, pair.b, kQ, kQ);
    const auto gate = compiler.compile_xy(0.0);
    for (const auto& tone : gate.signal.tones) CHECK(tone.amplitude == 0.0);
    CHECK(gate.strength == 0.0);
}

TEST_CASE("xx compilation: eight tones, halved amplitudes, sum gaps dominate") {
    Pair pair;
    pulse::PulseCompiler compiler(pair.a, pair.b, kQ, kQ);
    const double f = 0.05;
    const auto xy = compiler.compile_xy(f);
    const auto xx = compiler.compile_xx(f);

    REQUIRE(xx.signal.tones.size() == 8);
    for (int n = 0; n < 4; ++n) {
        CHECK(xx.signal.tones[n].amplitude ==
              doctest::Approx(0.5 * xy.signal.tones[n].amplitude).epsilon(1e-14));
        CHECK(xx.signal.tones[n].omega == xy.signal.tones[n].omega);
        // The sum-gap partner of each difference tone lies strictly above it.
        CHECK(xx.signal.tones[n + 4].omega > xx.signal.tones[n].omega);
    }
    std::set<double> omegas;
    for (const auto& tone : xx.signal.tones) omegas.insert(tone.omega);
    CHECK(omegas.size() == 8);
}

TEST_CASE("rotation drives hit the dressed gaps with the advertised weights") {
    Pair pair;
    pulse::PulseCompiler compiler(pair.a, pair.b, kQ, kQ);
    const double r = 1e7;
    const auto drive = compiler.compile_rotation('A', r, 0.3);
    CHECK(drive.tones[0].mu == doctest::Approx(pair.a.gap(1, 0)).epsilon(1e-14));
    CHECK(drive.tones[1].mu == doctest::Approx(pair.a.gap(2, 1)).epsilon(1e-14));
    CHECK(drive.tones[0].omega_amp ==
          doctest::Approx(std::sqrt(2.0) * r / pair.a.chi(1, 0)).epsilon(1e-14));
    CHECK(drive.tones[1].omega_amp ==
          doctest::Approx(std::sqrt(2.0) * r / pair.a.chi(2, 1)).epsilon(1e-14));
    CHECK(drive.duration == doctest::Approx(M_PI / (2.0 * r)).epsilon(1e-14));
    CHECK_THROWS(compiler.compile_rotation('A', 0.0, 0.0));
    CHECK_THROWS(compiler.compile_rotation('A', -1e6, 0.0));
    // r so large the 100x guard hits the drive frequency.
    CHECK_THROWS(compiler.compile_rotation('A', ghz(1.0), 0.0));
}

TEST_CASE("heisenberg schedule structure and duration") {
    Pair pair;
    pulse::PulseCompiler compiler(pair.a, pair.b, kQ, kQ, relaxed_policy());
    const double t = 1.37e-8, r = 1.41e8, c = 1.15e8;
    const int n_o = 10;
    const auto sched = compiler.schedule_heisenberg(t, n_o, c, c, c, r, 2);

    CHECK(sched.segments.size() == 7 * n_o);
    CHECK(sched.segments_per_step == 7);
    CHECK(sched.total_duration ==
          doctest::Approx(3.0 * t + 4.0 * n_o * M_PI / (2.0 * r)).epsilon(1e-14));

    // Step layout per the seven-step protocol.
    using K = pulse::SegmentKind;
    const K expect[7] = {K::rot_x_dag, K::xy, K::rot_x, K::rot_y,
                         K::xy,        K::rot_y_dag, K::xy};
    for (int i = 0; i < 7; ++i) CHECK(sched.segments[i].kind == expect[i]);

    // Lambda metadata: isotropic point when all strengths match.
    CHECK(sched.lambda_x == doctest::Approx(2.0 * c));
    CHECK(sched.lambda_y == doctest::Approx(2.0 * c));
    CHECK(sched.lambda_z == doctest::Approx(2.0 * c));

    // Total duration does not depend on the chain size: exact equality.
    const auto s3 = compiler.schedule_heisenberg(t, n_o, c, c, c, r, 3);
    const auto s4 = compiler.schedule_heisenberg(t, n_o, c, c, c, r, 4);
    CHECK(sched.total_duration == s3.total_duration);
    CHECK(sched.total_duration == s4.total_duration);
}

TEST_CASE("xxz schedule has four segments per step") {
    Pair pair;
    pulse::PulseCompiler compiler(pair.a, pair.b, kQ, kQ, relaxed_policy());
    const auto sched = compiler.schedule_xxz(1.37e-8, 5, 1.15e8, 0.6e8, 1.41e8, 2);
    CHECK(sched.segments.size() == 4 * 5);
    CHECK(sched.segments_per_step == 4);
    using K = pulse::SegmentKind;
    CHECK(sched.segments[0].kind == K::rot_y);
    CHECK(sched.segments[1].kind == K::xx);
    CHECK(sched.segments[2].kind == K::rot_y_dag);
    CHECK(sched.segments[3].kind == K::xy);
    CHECK(sched.lambda_z == doctest::Approx(0.6e8));

    const auto s3 = compiler.schedule_xxz(1.37e-8, 5, 1.15e8, 0.6e8, 1.41e8, 3);
    CHECK(sched.total_duration == s3.total_duration);
}

TEST_CASE("ising schedule is a single analog segment") {
    Pair pair;
    pulse::PulseCompiler compiler(pair.a, pair.b, kQ, kQ, relaxed_policy());
    const double j = 2.3e8, b = 6.3e7, t = 1.37e-8;
    const auto sched = compiler.schedule_ising(t, j, b, 0.0, 2);
    REQUIRE(sched.segments.size() == 1);
    CHECK(sched.segments[0].kind == pulse::SegmentKind::ising);
    CHECK(sched.segments[0].strength == j);
    CHECK(sched.segments[0].field_b == b);
    CHECK(sched.total_duration == t);
    REQUIRE(sched.segments[0].flux.has_value());
    CHECK(sched.segments[0].flux->tones.size() == 8);
    REQUIRE(sched.segments[0].drive_a.has_value());
}

TEST_CASE("schedule serializes to JSON with tones") {
    Pair pair;
    pulse::PulseCompiler compiler(pair.a, pair.b, kQ, kQ, relaxed_policy());
    const auto sched = compiler.schedule_xxz(1.37e-8, 2, 1.15e8, 0.6e8, 1.41e8, 2);
    const std::string json = sched.to_json();
    CHECK(json.find("\"segments\"") != std::string::npos);
    CHECK(json.find("\"rot_y\"") != std::string::npos);
    CHECK(json.find("flux_tones") != std::string::npos);
    CHECK(json.find("total_duration_s") != std::string::npos);
}

TEST_CASE("rwa guard rejects an overdriven gate") {
    Pair pair;
    pulse::PulseCompiler compiler(pair.a, pair.b, kQ, kQ);
    const double margin = compiler.xy_margin();
    CHECK(margin > 0.0);
    // Strength at the margin itself must refuse.
    CHECK_THROWS(compiler.compile_xy(margin / kQ));
}

TEST_CASE("vanishing chi elements are rejected at compile time") {
    // At g = 0 the kept levels are |g,0>, |e,0>, |g,1>; the 2<-1 transition
    // needs a qubit flip the field quadrature cannot supply, so chi_21 = 0.
    rabi::QrsParams p;
    p.omega_r = ghz(10.0);
    p.omega_q = ghz(9.0);
    p.g = 0.0;
    p.n_fock = 24;
    p.species = 'A';
    const auto bare = rabi::make_dressed_site(p, 3, 0.0, 0.0);
    CHECK(bare.chi(2, 1) == 0.0);
    const auto other = make_site(0.9, 'B', 3, 0.0, 0.0, 24);
    pulse::PulseCompiler compiler(bare, other, kQ, kQ);
    CHECK_THROWS_AS(compiler.compile_xy(0.001), std::invalid_argument);
    CHECK_THROWS_AS(compiler.compile_rotation('A', 1e6, 0.0), std::invalid_argument);
}

TEST_CASE("published coupling chain is self-consistent under the rad/s reading") {
    // Reading the quoted Q as 3.6555e7 rad/s, a dimensionless flux parameter
    // f = 2 pi reproduces the quoted effective exchange J = 2 pi x 36.6 MHz
    // to 0.2 percent; compiled metadata carries exactly f*sqrt(Q_A Q_B).
    const double q_formula = 3.6554930094e7;
    const double j_quoted = 2.2996458224277286e8;
    CHECK(std::abs(constants::two_pi * q_formula - j_quoted) / j_quoted < 2e-3);

    Pair pair;
    pulse::RwaPolicy pol = relaxed_policy();
    pol.ratio_max = 4.0;  // the quoted strength sits above the full margin
    pulse::PulseCompiler compiler(pair.a, pair.b, q_formula, q_formula, pol);
    const auto gate = compiler.compile_xy(j_quoted / q_formula);
    CHECK(gate.strength == doctest::Approx(j_quoted).epsilon(1e-14));
}

TEST_CASE("species gap separation covers the selectivity requirement") {
    // The (1,0) transition frequencies of the two species differ by much
    // more than 100x the protocol coupling strength.
    Pair pair;
    const double gap_a = pair.a.gap(1, 0);
    const double gap_b = pair.b.gap(1, 0);
    const double c_xy = 1.15e8;
    CHECK(std::abs(gap_a - gap_b) > 100.0 * c_xy);
}
