#include "support.hpp"

#include "stepnet/cc/cc_agent.hpp"
#include "stepnet/scenarios/registry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace acceptance {

using namespace stepnet;

Outcome alpha_scaling() {
    // Integer exponents have exact binary factors; no pow() on this route.
    const std::pair<double, double> factors[] = {{-2, 0.25}, {-1, 0.5}, {0, 1.0}, {1, 2.0}, {2, 4.0}};
    double worst = 0.0;
    int checked = 0;
    for (double cwnd = 4.0; cwnd < 5000.0; cwnd = cwnd * 1.37 + 0.11) {
        for (const auto& [alpha, factor] : factors) {
            const double expected = cwnd * factor;
            const double got = cc::apply_alpha(cwnd, alpha, 1e9);
            worst = std::max(worst, std::abs(got - expected) / expected);
            ++checked;
        }
    }
    const bool extremes = cc::apply_alpha(100.0, 2.0, 1e9) == 400.0 && cc::apply_alpha(100.0, -2.0, 1e9) == 25.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d window/alpha pairs, max relative error %.3g, x4 and x1/4 extremes %s",
                  checked, worst, extremes ? "exact" : "wrong");
    return verdict(worst < 1e-12 && extremes, buf);
}

namespace {

// Literal reading of the reward definition, written from the formula alone.
// Delay is in units of d_min. Delay equality is decided on the grid index.
double brute_force_reward(int ratio_i, int loss_i, int d_i, int dmax_i) {
    const double ratio = ratio_i / 20.0;
    const double loss = loss_i / 20.0;
    const double d = d_i / 20.0;
    const double d_max = dmax_i / 20.0;
    const double gain = ratio - loss;
    if (gain < 1.0 && d_i == 20) {
        return gain;
    }
    double spread = 0.0;
    if (dmax_i > 20) {
        spread = (d - 1.0) / (d_max - 1.0);
        spread = spread < 0.0 ? 0.0 : spread > 1.0 ? 1.0 : spread;
    }
    return gain * (1.0 / d) * (1.0 - spread);
}

} // namespace

Outcome reward_oracle() {
    const double d_min = 35e6;
    double worst = 0.0;
    long points = 0;
    long ones = 0;
    bool one_elsewhere = false;
    bool above_one = false;
    for (int r = 0; r <= 20; ++r) {
        for (int l = 0; l <= 20; ++l) {
            for (int d = 20; d <= 80; ++d) {
                for (int m = 20; m <= 80; ++m) {
                    const double expected = brute_force_reward(r, l, d, m);
                    const double got = cc::reward_of(r / 20.0, l / 20.0, d_min * (d / 20.0), d_min, d_min * (m / 20.0));
                    worst = std::max(worst, std::abs(got - expected));
                    ++points;
                    above_one = above_one || got > 1.0;
                    if (got == 1.0) {
                        ++ones;
                        one_elsewhere = one_elsewhere || r != 20 || l != 0 || d != 20;
                    }
                }
            }
        }
    }
    char buf[200];
    std::snprintf(buf, sizeof buf, "%ld grid points, max |difference| %.3g; r = 1 at %ld points%s%s", points, worst,
                  ones, one_elsewhere ? ", some away from (1, 0, d_min)" : ", all at (1, 0, d_min)",
                  above_one ? "; r > 1 seen" : "");
    return verdict(worst <= 1e-12 && ones > 0 && !one_elsewhere && !above_one, buf);
}

namespace {

// Reference pole: the classic-control formulation, coded independently.
struct Pole {
    double s[4];
};

Pole pole_step(const Pole& p, int push) {
    constexpr double g = 9.8, mc = 1.0, mp = 0.1, l = 0.5, f_mag = 10.0, dt = 0.02;
    const double f = push == 1 ? f_mag : -f_mag;
    const double c = std::cos(p.s[2]);
    const double sn = std::sin(p.s[2]);
    const double m = mc + mp;
    const double tmp = (f + mp * l * p.s[3] * p.s[3] * sn) / m;
    const double ang_acc = (g * sn - c * tmp) / (l * (4.0 / 3.0 - mp * c * c / m));
    const double lin_acc = tmp - mp * l * ang_acc * c / m;
    return Pole{{p.s[0] + dt * p.s[1], p.s[1] + dt * lin_acc, p.s[2] + dt * p.s[3], p.s[3] + dt * ang_acc}};
}

bool pole_fallen(const Pole& p) {
    const double limit = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
    return p.s[0] < -2.4 || p.s[0] > 2.4 || p.s[2] < -limit || p.s[2] > limit;
}

} // namespace

Outcome cartpole_equivalence() {
    auto environment = scenarios::make_environment({{"scenario", "cartpole"}, {"seed", 11}});
    std::mt19937_64 gen(20261016);
    double worst = 0.0;
    long compared = 0;
    int done_mismatch = 0;
    for (int seq = 0; seq < 100; ++seq) {
        // Half the sequences are coin flips, half a noisy balancing pattern
        // so that long trajectories are covered too.
        const double noise = seq % 2 == 0 ? 0.5 : 0.1;
        std::bernoulli_distribution flip(noise);
        auto obs = environment.reset(1000 + seq).at("cartpole");
        Pole ref{{obs[0], obs[1], obs[2], obs[3]}};
        for (int t = 1; !environment.episode_done(); ++t) {
            int push = ref.s[2] + 0.5 * ref.s[3] > 0.0 ? 1 : 0;
            if (flip(gen)) {
                push = 1 - push;
            }
            const auto result = environment.step({{"cartpole", env::discrete(static_cast<std::uint64_t>(push))}});
            ref = pole_step(ref, push);
            const auto& got = result.observations.at("cartpole");
            for (int i = 0; i < 4; ++i) {
                const double denom = std::max(std::abs(ref.s[i]), 1e-300);
                worst = std::max(worst, std::abs(got[i] - ref.s[i]) / denom);
            }
            ++compared;
            const bool ref_done = pole_fallen(ref) || t >= 500;
            done_mismatch += ref_done != result.dones.at("cartpole") ? 1 : 0;
        }
    }
    char buf[200];
    std::snprintf(buf, sizeof buf, "100 sequences, %ld steps compared, max relative error %.3g, %d done mismatches",
                  compared, worst, done_mismatch);
    return verdict(worst <= 1e-9 && done_mismatch == 0, buf);
}

} // namespace acceptance
