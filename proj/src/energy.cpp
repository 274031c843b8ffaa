#include "wattless/energy.hpp"

#include "wattless/util.hpp"

namespace wattless {

void EnergyModelParams::validate() const
{
    if (!(intensity_kwh_per_gb > 0) || !(cpu_joules_per_dom_op > 0) || !(carbon_g_per_kwh > 0)) {
        throw Error("energy model parameters must be positive");
    }
    double sum = 0;
    for (const auto& [name, share] : segment_shares) {
        if (!(share > 0) || name == "other") {
            throw Error("invalid segment share: " + name);
        }
        sum += share;
    }
    if (sum > 1.0 + 1e-12) {
        throw Error("segment shares exceed 1");
    }
}

EnergyEstimate estimate_energy(std::uint64_t bytes, std::size_t dom_ops, const EnergyModelParams& p)
{
    EnergyEstimate e;
    e.bytes = bytes;
    e.dom_ops = dom_ops;
    e.transfer_joules = static_cast<double>(bytes) / 1e9 * p.intensity_kwh_per_gb * joules_per_kwh;
    double assigned = 0;
    double share_sum = 0;
    for (const auto& [name, share] : p.segment_shares) {
        double j = e.transfer_joules * share;
        e.per_segment_joules[name] = j;
        assigned += j;
        share_sum += share;
    }
    // "other" takes the exact remainder so the segments sum to the transfer term
    e.per_segment_joules["other"] = share_sum < 1.0 ? e.transfer_joules - assigned : 0.0;
    e.cpu_joules = static_cast<double>(dom_ops) * p.cpu_joules_per_dom_op;
    e.total_joules = e.transfer_joules + e.cpu_joules;
    return e;
}

EnergyEstimate estimate_energy(const WeightReport& w, const EnergyModelParams& p)
{
    return estimate_energy(w.total_bytes, w.dom_ops, p);
}

SavingsReport compute_savings(const EnergyEstimate& before, const EnergyEstimate& after)
{
    if (before.total_joules == 0) {
        throw Error("savings percentage undefined for zero baseline energy");
    }
    SavingsReport r;
    r.before = before;
    r.after = after;
    r.delta_joules = before.total_joules - after.total_joules;
    r.delta_percent = 100.0 * r.delta_joules / before.total_joules;
    return r;
}

double estimate_carbon(const EnergyEstimate& e, const EnergyModelParams& p)
{
    return e.total_joules / joules_per_kwh * p.carbon_g_per_kwh;
}

BreakevenReport breakeven(double overhead_kwh, double reduction_rate, double per_view_wh)
{
    if (!(reduction_rate > 0 && reduction_rate <= 1)) {
        throw Error("reduction rate must lie in (0, 1]");
    }
    if (!(per_view_wh > 0)) {
        throw Error("per-view energy must be positive");
    }
    BreakevenReport r;
    r.overhead_kwh = overhead_kwh;
    r.reduction_rate = reduction_rate;
    r.per_view_wh = per_view_wh;
    r.breakeven_frontend_kwh = overhead_kwh / reduction_rate;
    r.breakeven_views = 1000.0 * r.breakeven_frontend_kwh * 1000.0 / per_view_wh;
    return r;
}

} // namespace wattless
