#include <array>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli_context.hpp"
#include "weavesim/abstraction.hpp"
#include "weavesim/config_text.hpp"
#include "weavesim/linksim.hpp"
#include "weavesim/rng.hpp"
#include "weavesim/scenario.hpp"
#include "weavesim/sinr.hpp"

namespace weavesim::cli {
namespace {

struct CdfPreset {
  double length, width, height;
  int antennas, users, blocks;
  LinkDirection direction;
};

// Desk presets keep every figure to minutes on one core; full presets use the
// reference deployment sizes.
CdfPreset cdf_preset(const std::string& name, bool full) {
  if (name == "fig2") return full ? CdfPreset{40, 40, 10, 512, 100, 100, LinkDirection::kDownlink}
                                  : CdfPreset{40, 40, 10, 128, 20, 20, LinkDirection::kDownlink};
  if (name == "fig3") return full ? CdfPreset{140, 70, 15, 1024, 200, 50, LinkDirection::kDownlink}
                                  : CdfPreset{140, 70, 15, 256, 40, 10, LinkDirection::kDownlink};
  return full ? CdfPreset{40, 40, 10, 512, 100, 100, LinkDirection::kUplink}
              : CdfPreset{40, 40, 10, 128, 20, 20, LinkDirection::kUplink};
}

struct LinkPreset {
  std::uint64_t ref_packets;
  int cal_profiles;
  int val_profiles;
  std::uint64_t profile_packets;
};

LinkPreset link_preset(bool full) {
  return full ? LinkPreset{20000, 64, 72, 5000} : LinkPreset{2000, 24, 24, 1000};
}

std::string num(double v) { return config::format_number(v); }

Scenario cdf_scenario(const CdfPreset& p, const std::string& pattern, std::uint64_t user_seed) {
  // Config integers are exact only below 2^53.
  const std::uint64_t seed53 = user_seed & ((1ULL << 53) - 1);
  std::ostringstream c;
  c << "room_length_m = " << num(p.length) << "\nroom_width_m = " << num(p.width)
    << "\nroom_height_m = " << num(p.height) << "\nnum_antennas = " << p.antennas
    << "\nnum_users = " << p.users << "\npattern = " << config::quote(pattern)
    << "\ndirection = " << config::quote(to_string(p.direction)) << "\nuser_seed = " << seed53 << "\n";
  return load_scenario(c.str());
}

void cdf_figure(Context& ctx, const std::string& name, bool full) {
  const CdfPreset p = cdf_preset(name, full);
  const std::array<TraceVariant, 4> variants = {{
      {CsiKind::kPerfect, PrecoderKind::kZf},
      {CsiKind::kPerfect, PrecoderKind::kMrt},
      {CsiKind::kLs, PrecoderKind::kZf},
      {CsiKind::kLs, PrecoderKind::kMrt},
  }};
  const std::string uplink_name = p.direction == LinkDirection::kUplink ? "mrc" : "mrt";
  std::ostringstream summary;
  summary << "antenna,csi,precoder,median_db,p10_db,p90_db,samples\n";
  for (const char* pattern : {"patch", "omni"}) {
    const Scenario s = cdf_scenario(p, pattern, ctx.seed);
    // The legend entries of one antenna type share drops, channels and pilot noise.
    const auto traces = generate_traces(s, variants, p.blocks, ctx.seed, ctx.threads);
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const CdfTable cdf = empirical_cdf(traces[v]);
      std::ostringstream os;
      write_cdf_csv(os, cdf);
      const std::string csi(to_string(variants[v].csi));
      const std::string precoder = variants[v].precoder == PrecoderKind::kZf ? "zf" : uplink_name;
      ctx.write_output(name + "_" + pattern + "_" + csi + "_" + precoder + ".csv", os.str());
      auto quantile = [&](double q) {
        std::size_t i = static_cast<std::size_t>(q * static_cast<double>(cdf.size()));
        if (i >= cdf.size()) i = cdf.size() - 1;
        return cdf[i].value_db;
      };
      summary << pattern << "," << csi << "," << precoder << "," << num(quantile(0.5)) << ","
              << num(quantile(0.1)) << "," << num(quantile(0.9)) << "," << cdf.size() << "\n";
    }
  }
  ctx.write_output(name + "_summary.csv", summary.str());
}

struct McsGrid {
  const char* name;
  double lo, step, hi;
};

constexpr std::array<McsGrid, 3> kMcsGrids = {{
    {"bpsk_r12_conv", -5.0, 0.25, 5.0},
    {"qpsk_r12_conv", -2.0, 0.25, 8.0},
    {"qam16_r12_conv", 2.0, 0.25, 14.0},
}};

std::vector<double> grid_of(const McsGrid& g) {
  std::vector<double> out;
  const int n = static_cast<int>((g.hi - g.lo) / g.step + 0.5) + 1;
  for (int i = 0; i < n; ++i) out.push_back(g.lo + i * g.step);
  return out;
}

void fig5(Context& ctx, bool full) {
  const LinkPreset lp = link_preset(full);
  LinkOptions opts;
  opts.threads = ctx.threads;
  std::ostringstream betas;
  betas << "mcs,beta_star,residual_rms,samples_used\n";
  for (std::size_t m = 0; m < kMcsGrids.size(); ++m) {
    const McsGrid& g = kMcsGrids[m];
    const McsEntry mcs = mcs_from_name(g.name);
    const auto grid = grid_of(g);
    const RefCurve curve = awgn_reference_curve(mcs, grid, lp.ref_packets, mix64(ctx.seed ^ (0x5f00 + m)), opts);
    std::ostringstream cs;
    write_curve_csv(cs, curve);
    ctx.write_output(std::string("fig5_") + g.name + "_ref.csv", cs.str());

    // Levels are placed with the reference beta of the same MCS index so the
    // calibration set straddles the waterfall.
    ProfileSetSpec spec;
    spec.num_profiles = lp.cal_profiles;
    spec.placement_beta = beta_lookup(mcs.index, CodeFamily::kLdpcRef);
    const auto cal_profiles = rayleigh_profiles(spec, curve, mix64(ctx.seed ^ (0x5f10 + m)), ctx.threads);
    const auto cal = simulate_profiles(cal_profiles, mcs, lp.profile_packets, mix64(ctx.seed ^ (0x5f20 + m)), opts);
    const CalibrationResult r = calibrate_beta(cal, curve);
    betas << g.name << "," << num(r.beta_star) << "," << num(r.residual_rms) << "," << r.samples_used << "\n";

    spec.num_profiles = lp.val_profiles;
    spec.placement_beta = r.beta_star;
    spec.per_high = 0.5;
    spec.per_low = 1e-2;
    const auto val_profiles = rayleigh_profiles(spec, curve, mix64(ctx.seed ^ (0x5f30 + m)), ctx.threads);
    const auto val = simulate_profiles(val_profiles, mcs, lp.profile_packets, mix64(ctx.seed ^ (0x5f40 + m)), opts);
    std::ostringstream ps;
    ps << "gamma_eff_db,per_sim,per_awgn\n";
    for (const auto& s : val) {
      const double ge = compress(s.gammas, CompressionMethod::kEesm, r.beta_star);
      ps << num(linear_to_db(ge)) << "," << num(s.per_sim) << "," << num(predict_per(ge, curve)) << "\n";
    }
    ctx.write_output(std::string("fig5_") + g.name + "_points.csv", ps.str());
  }
  ctx.write_output("fig5_beta.csv", betas.str());
}

void fig6(Context& ctx, bool full) {
  const LinkPreset lp = link_preset(full);
  LinkOptions opts;
  opts.threads = ctx.threads;
  const McsGrid& g = kMcsGrids[1];
  const McsEntry mcs = mcs_from_name(g.name);
  const RefCurve curve = awgn_reference_curve(mcs, grid_of(g), lp.ref_packets, mix64(ctx.seed ^ 0x6f00), opts);
  const double beta = beta_lookup(mcs.index, mcs.family);

  NotchProfileSpec spec;
  spec.num_profiles = 8;
  spec.placement_beta = beta;
  spec.per_high = 5e-2;
  spec.per_low = 1e-2;
  const auto profiles = notch_profiles(spec, curve, mix64(ctx.seed ^ 0x6f10));
  const auto sims = simulate_profiles(profiles, mcs, full ? 20000 : lp.profile_packets * 2,
                                      mix64(ctx.seed ^ 0x6f20), opts);

  std::ostringstream prof;
  prof << "profile,subcarrier,sinr_db\n";
  std::ostringstream pairs;
  pairs << "profile,gamma_eff_db,per_sim,per_pred\n";
  for (std::size_t p = 0; p < sims.size(); ++p) {
    for (std::size_t n = 0; n < sims[p].gammas.size(); ++n) {
      prof << p << "," << n << "," << num(linear_to_db(sims[p].gammas[n])) << "\n";
    }
    const double ge = compress(sims[p].gammas, CompressionMethod::kEesm, beta);
    pairs << p << "," << num(linear_to_db(ge)) << "," << num(sims[p].per_sim) << ","
          << num(predict_per(ge, curve)) << "\n";
  }
  std::ostringstream cs;
  write_curve_csv(cs, curve);
  ctx.write_output("fig6_ref.csv", cs.str());
  ctx.write_output("fig6_profiles.csv", prof.str());
  ctx.write_output("fig6_per.csv", pairs.str());
}

}  // namespace

void reproduce_figure(Context& ctx, const std::string& name, const std::string& scale) {
  if (scale != "desk" && scale != "full") throw ValidationError("unknown scale '" + scale + "' (desk | full)");
  const bool full = scale == "full";
  if (name == "fig2" || name == "fig3" || name == "fig4") {
    cdf_figure(ctx, name, full);
  } else if (name == "fig5") {
    fig5(ctx, full);
  } else if (name == "fig6") {
    fig6(ctx, full);
  } else {
    throw ValidationError("unknown figure '" + name + "' (fig2 | fig3 | fig4 | fig5 | fig6)");
  }
}

}  // namespace weavesim::cli
