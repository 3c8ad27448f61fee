#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli_context.hpp"
#include "weavesim/abstraction.hpp"
#include "weavesim/channel.hpp"
#include "weavesim/config_text.hpp"
#include "weavesim/linksim.hpp"
#include "weavesim/scenario.hpp"
#include "weavesim/sinr.hpp"

namespace weavesim::cli {
namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kUsage = 2, kValidation = 3, kRuntime = 4 };

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> out;
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::logic_error&) {
      throw ValidationError("invalid SNR grid value '" + s + "'");
    }
  };
  if (std::count(spec.begin(), spec.end(), ':') == 2) {
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 + 1);
    const double a = number(spec.substr(0, c1));
    const double step = number(spec.substr(c1 + 1, c2 - c1 - 1));
    const double b = number(spec.substr(c2 + 1));
    if (!(step > 0.0) || b < a) throw ValidationError("SNR grid a:step:b needs step > 0 and b >= a");
    const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
    if (n > 100000) throw ValidationError("SNR grid has too many points");
    for (long i = 0; i < n; ++i) out.push_back(a + static_cast<double>(i) * step);
  } else {
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(number(item));
  }
  if (out.empty()) throw ValidationError("empty SNR grid");
  return out;
}

std::string csv_number(double v) { return config::format_number(v); }

Scenario load_config(Context& ctx, const std::string& path) {
  const std::string text = ctx.read_input(path);
  try {
    Scenario s = load_scenario(text);
    ctx.config_hash = scenario_hash(s);
    return s;
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

SinrTrace load_trace(Context& ctx, const std::string& path) {
  std::istringstream is(ctx.read_input(path));
  return read_trace_csv(is);
}

RefCurve load_curve(Context& ctx, const std::string& path) {
  std::istringstream is(ctx.read_input(find_data_file(path)));
  return read_curve_csv(is);
}

std::vector<double> load_profile(Context& ctx, const std::string& path) {
  std::istringstream is(ctx.read_input(path));
  std::string line;
  bool header = false;
  std::vector<double> gammas;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "subcarrier,sinr_db") throw ValidationError("profile CSV: expected header 'subcarrier,sinr_db'");
      header = true;
      continue;
    }
    long sc = 0;
    double db = 0.0;
    char extra = 0;
    if (std::sscanf(line.c_str(), "%ld,%lf%c", &sc, &db, &extra) != 2) {
      throw ValidationError("profile CSV: malformed line '" + line + "'");
    }
    gammas.push_back(db_to_linear(db));
  }
  if (gammas.empty()) throw ValidationError("profile CSV: no rows");
  return gammas;
}

struct BetaChoice {
  std::optional<double> beta;
  std::optional<int> mcs_index;
  std::string family = "ConvK7";

  void add_options(CLI::App* cmd) {
    cmd->add_option("--beta", beta, "EESM / capacity calibration parameter");
    cmd->add_option("--mcs-index", mcs_index, "Look beta up in the table instead of --beta");
    cmd->add_option("--family", family, "Code family for --mcs-index (LDPC-ref | Polar-ref | ConvK7)");
  }
  double resolve(CompressionMethod method) const {
    if (beta) return *beta;
    if (mcs_index) return beta_lookup(*mcs_index, parse_code_family(family));
    if (method == CompressionMethod::kAverage) return 1.0;
    throw ValidationError("either --beta or --mcs-index is required");
  }
};

void write_manifest(const Context& ctx, const std::vector<std::string>& argv, const std::string& command,
                    const std::string& started, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["tool"] = "weavesim";
  j["version"] = kVersion;
  j["command"] = command;
  j["argv"] = argv;
  j["cwd"] = std::filesystem::current_path().string();
  j["seed"] = ctx.seed;
  j["threads"] = ctx.threads;
  j["config_hash"] = ctx.config_hash ? nlohmann::json(hex64(*ctx.config_hash)) : nlohmann::json(nullptr);
  j["started_utc"] = started;
  j["finished_utc"] = utc_now();
  auto records = [](const std::vector<FileRecord>& files) {
    nlohmann::ordered_json arr = nlohmann::json::array();
    for (const auto& f : files) arr.push_back({{"path", f.path}, {"fnv1a64", hex64(f.fnv1a64)}});
    return arr;
  };
  j["inputs"] = records(ctx.inputs());
  j["outputs"] = records(ctx.outputs());
  write_atomic(path, j.dump(2) + "\n");
}

int invoke(const std::vector<std::string>& args, const std::optional<std::filesystem::path>& replay_dir,
           Context* result_ctx);

// Re-runs a manifest with outputs remapped to a scratch directory and compares hashes.
void replay(const std::string& manifest_path, const std::string& replay_dir_opt) {
  std::ifstream f(manifest_path);
  if (!f) throw ValidationError("cannot open manifest " + manifest_path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!j.contains("argv") || !j["argv"].is_array() || !j.contains("outputs")) {
    throw ValidationError("manifest lacks argv/outputs");
  }
  const auto args = j["argv"].get<std::vector<std::string>>();
  if (!args.empty() && args.front() == "replay") throw ValidationError("manifest records a replay");
  const auto original_cwd = std::filesystem::current_path();
  std::filesystem::path scratch =
      replay_dir_opt.empty()
          ? std::filesystem::temp_directory_path() / ("weavesim-replay-" + hex64(cli::fnv1a64(j.dump())))
          : std::filesystem::absolute(replay_dir_opt);
  std::filesystem::create_directories(scratch);
  if (j.contains("cwd")) std::filesystem::current_path(j["cwd"].get<std::string>());

  for (const auto& in : j.value("inputs", nlohmann::json::array())) {
    std::ifstream g(in["path"].get<std::string>(), std::ios::binary);
    if (!g) throw ValidationError("manifest input missing: " + in["path"].get<std::string>());
    std::ostringstream ss;
    ss << g.rdbuf();
    if (hex64(fnv1a64(ss.str())) != in["fnv1a64"].get<std::string>()) {
      throw ValidationError("input changed since the manifest was written: " + in["path"].get<std::string>());
    }
  }

  Context rerun;
  const int code = invoke(args, scratch, &rerun);
  std::filesystem::current_path(original_cwd);
  if (code != kOk) throw SimulationError("replayed command exited with code " + std::to_string(code));

  const auto& expected = j["outputs"];
  const auto& got = rerun.outputs();
  if (expected.size() != got.size()) {
    throw SimulationError("replay produced " + std::to_string(got.size()) + " outputs, manifest lists " +
                          std::to_string(expected.size()));
  }
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (expected[i]["path"].get<std::string>() != got[i].path ||
        expected[i]["fnv1a64"].get<std::string>() != hex64(got[i].fnv1a64)) {
      throw SimulationError("replay mismatch for " + expected[i]["path"].get<std::string>());
    }
  }
  std::cout << "replay: " << got.size() << " outputs bit-identical (scratch " << scratch.string() << ")\n";
}

int invoke(const std::vector<std::string>& args, const std::optional<std::filesystem::path>& replay_dir,
           Context* result_ctx) {
  Context ctx;
  ctx.replay_dir = replay_dir;
  std::string out_dir;
  std::string manifest_override;
  std::function<void()> action;
  std::string command_name;
  std::filesystem::path manifest_hint;

  CLI::App app{"weavesim: SINR traces, EESM abstraction and link-level PER oracle", "weavesim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  app.add_option("--seed", ctx.seed, "Master seed")->capture_default_str();
  app.add_option("--threads", ctx.threads, "Worker threads (0 = available parallelism)")->capture_default_str();
  app.add_option("--out-dir", out_dir, "Directory for relative output paths");
  app.add_option("--manifest-out", manifest_override, "Manifest path (default: <first output>.manifest.json)");

  auto group = [&](const std::string& name, const std::string& desc) {
    auto* g = app.add_subcommand(name, desc);
    g->require_subcommand(1);
    g->fallthrough();
    return g;
  };
  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& desc) {
    auto* c = parent->add_subcommand(name, desc);
    c->fallthrough();
    return c;
  };

  // scenario validate
  std::string config_path;
  auto* scenario_cmd = group("scenario", "Scenario files");
  auto* validate_cmd = leaf(scenario_cmd, "validate", "Parse and validate a scenario config");
  validate_cmd->add_option("--config", config_path, "Scenario config")->required();
  validate_cmd->callback([&] {
    command_name = "scenario validate";
    action = [&] {
      const Scenario s = load_config(ctx, config_path);
      std::cout << "ok scenario_hash=" << hex64(scenario_hash(s)) << " M=" << s.num_antennas()
                << " K=" << s.num_users() << " subcarriers=" << s.radio.num_subcarriers() << "\n";
    };
  });

  // sinr generate
  int blocks = 1;
  std::string out_path;
  std::string cdf_out;
  auto* sinr_cmd = group("sinr", "SINR traces");
  auto* gen_cmd = leaf(sinr_cmd, "generate", "Generate a per-block, per-subcarrier SINR trace");
  gen_cmd->add_option("--config", config_path, "Scenario config")->required();
  gen_cmd->add_option("--blocks", blocks, "Coherence blocks (drops)")->capture_default_str();
  gen_cmd->add_option("--out", out_path, "Trace CSV")->required();
  gen_cmd->add_option("--cdf", cdf_out, "Also write the CDF of all samples");
  gen_cmd->callback([&] {
    command_name = "sinr generate";
    action = [&] {
      const Scenario s = load_config(ctx, config_path);
      const SinrTrace trace = generate_trace(s, blocks, ctx.seed, ctx.threads);
      std::ostringstream os;
      write_trace_csv(os, trace);
      ctx.write_output(out_path, os.str());
      if (!cdf_out.empty()) {
        std::ostringstream cs;
        write_cdf_csv(cs, empirical_cdf(trace));
        ctx.write_output(cdf_out, cs.str());
      }
      if (trace.rejected_drops > 0) std::cerr << "note: " << trace.rejected_drops << " drops redrawn\n";
    };
  });

  // report cdf
  std::string trace_path;
  std::optional<int> user;
  auto* report_cmd = group("report", "Reports over traces");
  auto* cdf_cmd = leaf(report_cmd, "cdf", "Empirical CDF of a trace");
  cdf_cmd->add_option("--trace", trace_path, "Trace CSV")->required();
  cdf_cmd->add_option("--out", out_path, "CDF CSV")->required();
  cdf_cmd->add_option("--user", user, "Restrict to one user");
  cdf_cmd->callback([&] {
    command_name = "report cdf";
    action = [&] {
      const SinrTrace trace = load_trace(ctx, trace_path);
      std::ostringstream os;
      write_cdf_csv(os, empirical_cdf(trace, user));
      ctx.write_output(out_path, os.str());
    };
  });

  // eesm compress / calibrate
  std::string method_name = "eesm";
  int blocks_per_codeword = 1;
  BetaChoice beta_choice;
  auto* eesm_cmd = group("eesm", "Effective SINR mapping");
  auto* compress_cmd = leaf(eesm_cmd, "compress", "Effective SINR per (user, codeword) of a trace");
  compress_cmd->add_option("--trace", trace_path, "Trace CSV")->required();
  compress_cmd->add_option("--method", method_name, "eesm | capacity | average")->capture_default_str();
  compress_cmd->add_option("--blocks-per-codeword", blocks_per_codeword, "Blocks per codeword")->capture_default_str();
  compress_cmd->add_option("--out", out_path, "Output CSV (default stdout)");
  beta_choice.add_options(compress_cmd);
  compress_cmd->callback([&] {
    command_name = "eesm compress";
    action = [&] {
      const auto method = parse_compression_method(method_name);
      const double beta = beta_choice.resolve(method);
      const SinrTrace trace = load_trace(ctx, trace_path);
      std::ostringstream os;
      os << "user,first_block,gamma_eff_db\n";
      for (const auto& p : trace_profiles(trace, blocks_per_codeword)) {
        os << p.user << "," << p.first_block << "," << csv_number(linear_to_db(compress(p.gammas, method, beta)))
           << "\n";
      }
      if (out_path.empty()) {
        std::cout << os.str();
      } else {
        ctx.write_output(out_path, os.str());
      }
    };
  });

  std::string calset_path;
  std::string curve_path;
  std::string table_out;
  std::string mcs_name_opt;
  BetaSearch search;
  auto* calibrate_cmd = leaf(eesm_cmd, "calibrate", "Fit the EESM beta to a calibration set");
  calibrate_cmd->add_option("--calset", calset_path, "Calibration set CSV")->required();
  calibrate_cmd->add_option("--curve", curve_path, "AWGN reference curve CSV")->required();
  calibrate_cmd->add_option("--beta-lo", search.beta_lo)->capture_default_str();
  calibrate_cmd->add_option("--beta-hi", search.beta_hi)->capture_default_str();
  calibrate_cmd->add_option("--grid-points", search.grid_points)->capture_default_str();
  calibrate_cmd->add_option("--per-lo", search.per_lo)->capture_default_str();
  calibrate_cmd->add_option("--per-hi", search.per_hi)->capture_default_str();
  calibrate_cmd->add_option("--out", out_path, "Result CSV (default stdout)");
  calibrate_cmd->add_option("--mcs", mcs_name_opt, "MCS of the calibration, for --table-out");
  calibrate_cmd->add_option("--table-out", table_out, "Write the beta table with this result merged in");
  calibrate_cmd->callback([&] {
    command_name = "eesm calibrate";
    action = [&] {
      std::istringstream cs(ctx.read_input(calset_path));
      const auto calset = read_calset_csv(cs);
      const RefCurve curve = load_curve(ctx, curve_path);
      const CalibrationResult r = calibrate_beta(calset, curve, search);
      std::ostringstream os;
      os << "beta_star,residual_rms,samples_used,samples_windowed_out,zero_per_samples\n"
         << csv_number(r.beta_star) << "," << csv_number(r.residual_rms) << "," << r.samples_used << ","
         << r.samples_windowed_out << "," << r.zero_per_samples << "\n";
      if (out_path.empty()) {
        std::cout << os.str();
      } else {
        ctx.write_output(out_path, os.str());
      }
      if (!table_out.empty()) {
        if (mcs_name_opt.empty()) throw ValidationError("--table-out requires --mcs");
        McsEntry e = mcs_from_name(mcs_name_opt);
        e.beta = r.beta_star;
        BetaTable table = BetaTable::builtin();
        table.upsert(e);
        std::ostringstream ts;
        table.write_csv(ts);
        ctx.write_output(table_out, ts.str());
      }
    };
  });

  // per predict
  auto* per_cmd = group("per", "PER prediction");
  auto* predict_cmd = leaf(per_cmd, "predict", "Predicted PER per (user, codeword) of a trace");
  predict_cmd->add_option("--trace", trace_path, "Trace CSV")->required();
  predict_cmd->add_option("--curve", curve_path, "AWGN reference curve CSV")->required();
  predict_cmd->add_option("--method", method_name, "eesm | capacity | average")->capture_default_str();
  predict_cmd->add_option("--blocks-per-codeword", blocks_per_codeword, "Blocks per codeword")->capture_default_str();
  predict_cmd->add_option("--out", out_path, "Output CSV (default stdout)");
  beta_choice.add_options(predict_cmd);
  predict_cmd->callback([&] {
    command_name = "per predict";
    action = [&] {
      const auto method = parse_compression_method(method_name);
      const double beta = beta_choice.resolve(method);
      const SinrTrace trace = load_trace(ctx, trace_path);
      const RefCurve curve = load_curve(ctx, curve_path);
      std::ostringstream os;
      os << "user,first_block,gamma_eff_db,per_pred\n";
      for (const auto& p : trace_profiles(trace, blocks_per_codeword)) {
        const double g = compress(p.gammas, method, beta);
        os << p.user << "," << p.first_block << "," << csv_number(linear_to_db(g)) << ","
           << csv_number(predict_per(g, curve)) << "\n";
      }
      if (out_path.empty()) {
        std::cout << os.str();
      } else {
        ctx.write_output(out_path, os.str());
      }
    };
  });

  // ref gen
  std::string mcs_name_arg = "qpsk_r12_conv";
  std::string grid_spec;
  std::uint64_t packets = 10000;
  LinkOptions link_opts;
  auto* ref_cmd = group("ref", "AWGN reference curves");
  auto* refgen_cmd = leaf(ref_cmd, "gen", "Simulate an AWGN SNR -> PER curve");
  refgen_cmd->add_option("--mcs", mcs_name_arg, "bpsk_r12_conv | qpsk_r12_conv | qam16_r12_conv")->capture_default_str();
  refgen_cmd->add_option("--grid", grid_spec, "SNR grid in dB, a:step:b or comma list")->required();
  refgen_cmd->add_option("--packets", packets, "Packets per grid point")->capture_default_str();
  refgen_cmd->add_option("--info-bits", link_opts.info_bits, "Information bits per packet")->capture_default_str();
  refgen_cmd->add_option("--out", out_path, "Curve CSV")->required();
  refgen_cmd->callback([&] {
    command_name = "ref gen";
    action = [&] {
      link_opts.threads = ctx.threads;
      const auto grid = parse_grid(grid_spec);
      const RefCurve curve = awgn_reference_curve(mcs_from_name(mcs_name_arg), grid, packets, ctx.seed, link_opts);
      std::ostringstream os;
      write_curve_csv(os, curve);
      ctx.write_output(out_path, os.str());
    };
  });

  // linksim per / calset
  std::string profile_path;
  auto* linksim_cmd = group("linksim", "Link-level Monte Carlo");
  auto* lper_cmd = leaf(linksim_cmd, "per", "Simulated PER of one SINR profile");
  lper_cmd->add_option("--profile", profile_path, "Profile CSV (subcarrier,sinr_db)")->required();
  lper_cmd->add_option("--mcs", mcs_name_arg, "MCS name")->capture_default_str();
  lper_cmd->add_option("--packets", packets, "Packets")->capture_default_str();
  lper_cmd->add_option("--info-bits", link_opts.info_bits, "Information bits per packet")->capture_default_str();
  lper_cmd->add_flag("--uncoded", link_opts.uncoded, "Bypass the channel code");
  lper_cmd->add_option("--out", out_path, "Result CSV (default stdout)");
  lper_cmd->callback([&] {
    command_name = "linksim per";
    action = [&] {
      link_opts.threads = ctx.threads;
      const auto profile = load_profile(ctx, profile_path);
      const PacketResult r = simulate_per(profile, mcs_from_name(mcs_name_arg), packets, ctx.seed, link_opts);
      std::ostringstream os;
      os << "n_packets,n_errors,per,n_bits,bit_errors,ber\n"
         << r.n_packets << "," << r.n_errors << "," << csv_number(r.per()) << "," << r.n_bits << ","
         << r.bit_errors << "," << csv_number(r.ber()) << "\n";
      if (out_path.empty()) {
        std::cout << os.str();
      } else {
        ctx.write_output(out_path, os.str());
      }
    };
  });

  std::string profile_kind = "rayleigh";
  ProfileSetSpec rayleigh_spec;
  std::optional<int> users_opt;
  auto* calset_cmd = leaf(linksim_cmd, "calset", "Simulate a calibration set of random SINR profiles");
  calset_cmd->add_option("--mcs", mcs_name_arg, "MCS name")->capture_default_str();
  calset_cmd->add_option("--curve", curve_path, "AWGN reference curve used to place profile levels")->required();
  calset_cmd->add_option("--kind", profile_kind, "rayleigh | notch")->capture_default_str();
  calset_cmd->add_option("--antennas", rayleigh_spec.num_antennas, "Antennas (rayleigh)")->capture_default_str();
  calset_cmd->add_option("--users", users_opt, "Users (rayleigh; default antennas - 1)");
  calset_cmd->add_option("--subcarriers", rayleigh_spec.num_subcarriers, "Subcarriers per profile")->capture_default_str();
  calset_cmd->add_option("--profiles", rayleigh_spec.num_profiles, "Profiles")->capture_default_str();
  calset_cmd->add_option("--placement-beta", rayleigh_spec.placement_beta, "Beta used to place profile levels")
      ->capture_default_str();
  calset_cmd->add_option("--packets", packets, "Packets per profile")->capture_default_str();
  calset_cmd->add_option("--out", out_path, "Calibration set CSV")->required();
  calset_cmd->callback([&] {
    command_name = "linksim calset";
    action = [&] {
      link_opts.threads = ctx.threads;
      const McsEntry mcs = mcs_from_name(mcs_name_arg);
      const RefCurve curve = load_curve(ctx, curve_path);
      std::vector<std::vector<double>> profiles;
      if (profile_kind == "rayleigh") {
        rayleigh_spec.num_users = users_opt.value_or(rayleigh_spec.num_antennas - 1);
        profiles = rayleigh_profiles(rayleigh_spec, curve, ctx.seed, ctx.threads);
      } else if (profile_kind == "notch") {
        NotchProfileSpec n;
        n.num_subcarriers = rayleigh_spec.num_subcarriers;
        n.num_profiles = rayleigh_spec.num_profiles;
        n.placement_beta = rayleigh_spec.placement_beta;
        profiles = notch_profiles(n, curve, ctx.seed);
      } else {
        throw ValidationError("unknown profile kind '" + profile_kind + "' (rayleigh | notch)");
      }
      const auto samples = simulate_profiles(profiles, mcs, packets, ctx.seed, link_opts);
      std::ostringstream os;
      write_calset_csv(os, samples);
      ctx.write_output(out_path, os.str());
    };
  });

  // channel dump
  int block = 0;
  auto* channel_cmd = group("channel", "Channel matrices");
  auto* dump_cmd = leaf(channel_cmd, "dump", "Write the true channel of one block");
  dump_cmd->add_option("--config", config_path, "Scenario config")->required();
  dump_cmd->add_option("--block", block, "Block index")->capture_default_str();
  dump_cmd->add_option("--out", out_path, "Channel CSV")->required();
  dump_cmd->callback([&] {
    command_name = "channel dump";
    action = [&] {
      const Scenario s = load_config(ctx, config_path);
      const auto mats = draw_channel(s, block, ctx.seed);
      std::ostringstream os;
      write_channel_csv(os, mats);
      ctx.write_output(out_path, os.str());
    };
  });

  // figure
  std::string figure_name;
  std::string scale = "desk";
  auto* figure_cmd = app.add_subcommand("figure", "Emit the CSV bundle behind one figure");
  figure_cmd->fallthrough();
  figure_cmd->add_option("--name", figure_name, "fig2 | fig3 | fig4 | fig5 | fig6")->required();
  figure_cmd->add_option("--scale", scale, "desk | full")->capture_default_str();
  figure_cmd->callback([&] {
    command_name = "figure";
    action = [&] {
      reproduce_figure(ctx, figure_name, scale);
      manifest_hint = ctx.out_dir / (figure_name + "_" + scale + ".manifest.json");
    };
  });

  // replay
  std::string manifest_path;
  std::string replay_dir_opt;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a manifest and verify outputs bit-identically");
  replay_cmd->fallthrough();
  replay_cmd->add_option("--manifest", manifest_path, "Manifest JSON")->required();
  replay_cmd->add_option("--replay-dir", replay_dir_opt, "Scratch directory for the re-run outputs");
  replay_cmd->callback([&] {
    command_name = "replay";
    action = [&] { replay(manifest_path, replay_dir_opt); };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    std::cout << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "weavesim: error: usage: " << one_line(e.what()) << "\n";
    std::cerr << app.help();
    return kUsage;
  }
  if (!action) {
    std::cerr << "weavesim: error: usage: no command given\n" << app.help();
    return kUsage;
  }

  const std::string started = utc_now();
  try {
    ctx.out_dir = out_dir;
    action();
    if (command_name != "replay" && !replay_dir && !ctx.outputs().empty()) {
      std::filesystem::path mpath;
      if (!manifest_override.empty()) {
        mpath = manifest_override;
      } else if (!manifest_hint.empty()) {
        mpath = manifest_hint;
      } else {
        mpath = ctx.outputs().front().path + ".manifest.json";
      }
      write_manifest(ctx, args, command_name, started, mpath);
    }
  } catch (const ValidationError& e) {
    std::cerr << "weavesim: error: validation: " << one_line(e.what()) << "\n";
    return kValidation;
  } catch (const SimulationError& e) {
    std::cerr << "weavesim: error: runtime: " << one_line(e.what()) << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "weavesim: error: runtime: " << one_line(e.what()) << "\n";
    return kRuntime;
  }
  if (result_ctx) *result_ctx = std::move(ctx);
  return kOk;
}

}  // namespace
}  // namespace weavesim::cli

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return weavesim::cli::invoke(args, std::nullopt, nullptr);
}
