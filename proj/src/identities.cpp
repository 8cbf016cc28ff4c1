#include "relaxflow/identities.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "relaxflow/acpf.hpp"

namespace relaxflow {

Branch random_identity_branch(Rng& rng, bool degenerate) {
    Branch br;
    br.from_bus = 1;
    br.to_bus = 2;
    br.r = rng.uniform(0.0, 0.05);
    br.x = rng.uniform(0.01, 0.3);
    if (degenerate) {
        br.b_charge = 0.0;
        br.tap = 1.0;
        br.shift = 0.0;
    } else {
        br.b_charge = rng.uniform(0.0, 0.5);
        br.tap = rng.uniform(0.9, 1.1);
        br.shift = rng.uniform(-0.2, 0.2);
    }
    return br;
}

Complex random_identity_voltage(Rng& rng) {
    const double pi = std::numbers::pi;
    return std::polar(rng.uniform(0.9, 1.1), rng.uniform(-pi / 2.0, pi / 2.0));
}

std::map<std::string, double> run_identity_sweep(int draws, std::uint64_t seed, bool degenerate) {
    std::map<std::string, double> worst{
        {"line_loss", 0.0},        {"voltage_drop", 0.0}, {"voltage_drop_imag", 0.0},
        {"current_square", 0.0},   {"power_square", 0.0}, {"voltage_product_square", 0.0},
        {"flow_reconstruction", 0.0}};
    Rng rng(seed);
    for (int k = 0; k < draws; ++k) {
        const Branch br = random_identity_branch(rng, degenerate);
        const Complex vi = random_identity_voltage(rng);
        const Complex vj = random_identity_voltage(rng);
        const Complex t = tap_complex(br);
        const double t2 = std::norm(t);
        const Complex s_ij = branch_flow_from(vi, vj, br);
        const Complex s_ji = branch_flow_to(vi, vj, br);
        const Complex current = branch_current(vi, vj, br);

        auto rel = [](double err, double ref) { return err / std::max(1.0, std::abs(ref)); };

        const Complex loss = loss_identity_residual(vi, vj, br);
        worst["line_loss"] =
            std::max(worst["line_loss"], rel(std::abs(loss), std::abs(s_ij + s_ji)));

        const Complex drop = voltage_drop_identity_residual_complex(vi, vj, br);
        const double drop_lhs = (1.0 - br.x * br.b_charge) * std::norm(vi) / t2 - std::norm(vj);
        worst["voltage_drop"] =
            std::max(worst["voltage_drop"], rel(std::abs(drop.real()), drop_lhs));
        worst["voltage_drop_imag"] = std::max(worst["voltage_drop_imag"], std::abs(drop.imag()));

        const double i2 = std::norm(current);
        worst["current_square"] = std::max(
            worst["current_square"], rel(std::abs(i2 - abs_sq_current_rhs(vi, vj, s_ij, br)), i2));

        const double s2 = std::norm(s_ij);
        worst["power_square"] =
            std::max(worst["power_square"], rel(std::abs(s2 - std::norm(vi) / t2 * i2), s2));

        const double vv2 = std::norm(vi * std::conj(vj));
        worst["voltage_product_square"] = std::max(
            worst["voltage_product_square"], rel(std::abs(vv2 - std::norm(vi) * std::norm(vj)), vv2));

        // Loss and the end-to-end difference pin both flows; rebuilding them
        // must reproduce the direct evaluations.
        const Complex y = admittance(br);
        const Complex vvq = vi * std::conj(vj);
        const Complex sum = std::conj(y) * (std::norm(vi) / t2 - vvq / std::conj(t) -
                                            std::conj(vvq) / t + Complex(std::norm(vj), 0.0)) -
                            Complex(0.0, br.b_charge / 2.0) * (std::norm(vi) / t2 + std::norm(vj));
        const Complex diff =
            (std::conj(y) - Complex(0.0, br.b_charge / 2.0)) *
                (std::norm(vi) / t2 - std::norm(vj)) -
            std::conj(y) * (vvq / std::conj(t) - std::conj(vvq) / t);
        const Complex rebuilt_from = 0.5 * (sum + diff);
        const Complex rebuilt_to = 0.5 * (sum - diff);
        const double recon = std::max(std::abs(rebuilt_from - s_ij), std::abs(rebuilt_to - s_ji));
        worst["flow_reconstruction"] =
            std::max(worst["flow_reconstruction"], rel(recon, std::abs(s_ij)));
    }
    return worst;
}

}  // namespace relaxflow
