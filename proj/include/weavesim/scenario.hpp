#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "weavesim/common.hpp"
#include "weavesim/rng.hpp"

namespace weavesim {

struct RoomGeometry {
  double length = 0.0;  // along x
  double width = 0.0;   // along y
  double height = 0.0;  // along z

  double perimeter() const { return 2.0 * (length + width); }
  bool contains(const Vec3& p, bool strict) const;
};

enum class PatternKind { kOmni, kPatch };

struct PatternSpec {
  PatternKind kind = PatternKind::kPatch;
  double patch_h_m = 0.001588;
  // Absent -> rectangular-patch design rule at the carrier frequency.
  std::optional<double> patch_w_m;
  double epsilon_r = 10.2;
  // Puts the patch width along the horizontal wall tangent instead of the vertical.
  bool rotate_90 = false;
};

// Patch width from the textbook design rule W = c / (2 f) * sqrt(2 / (eps_r + 1)).
double patch_width_design_rule(double carrier_freq_hz, double epsilon_r);

struct AntennaElement {
  Vec3 position = Vec3::Zero();
  // Columns are the local x (boresight), y and z axes in room coordinates.
  Mat3 basis = Mat3::Identity();
  int wall = 0;
  double wall_offset = 0.0;

  Vec3 boresight() const { return basis.col(0); }
};

struct UserPosition {
  Vec3 position = Vec3::Zero();
};

struct RadioConfig {
  double carrier_freq_hz = 2e9;
  double signal_bw_hz = 20e6;
  double subcarrier_bw_hz = 200e3;
  // Total transmit powers over the signal bandwidth.
  double rho_dl_w = 1e-3;
  double rho_ul_w = 1e-6;
  double pilot_power_w = 20e-6;
  double nf_bs_db = 5.0;
  double nf_ue_db = 9.0;
  double temperature_k = 300.0;
  double boltzmann = kBoltzmann;
  int tau_p = 0;  // 0 in a config means "K"
  int tau_c = 200;

  int num_subcarriers() const;
};

enum class ChannelKind { kLos, kRayleigh };
enum class CsiKind { kPerfect, kLs };
enum class PrecoderKind { kMrt, kZf };  // MRT doubles as MRC in the uplink
enum class LinkDirection { kDownlink, kUplink };
enum class Topology { kUlaFourWalls };

struct Scenario {
  RoomGeometry room;
  Topology topology = Topology::kUlaFourWalls;
  double mount_height_m = 0.0;
  double user_height_m = 1.5;
  double d_min_m = 0.5;
  std::uint64_t user_seed = 1;
  bool resample_users_per_drop = true;

  std::vector<AntennaElement> antennas;
  std::vector<UserPosition> users;

  RadioConfig radio;
  PatternSpec pattern;
  ChannelKind channel_kind = ChannelKind::kLos;
  int coherence_group_size = 1;
  bool los_frequency_flat = false;
  CsiKind csi_kind = CsiKind::kLs;
  PrecoderKind precoder_kind = PrecoderKind::kZf;
  LinkDirection direction = LinkDirection::kDownlink;
  std::vector<double> power_control;

  int num_antennas() const { return static_cast<int>(antennas.size()); }
  int num_users() const { return static_cast<int>(users.size()); }
  double patch_width_m() const;
};

// Parses and fully validates a scenario. Unknown keys, wrong types and
// violated invariants raise ValidationError naming the key or constraint.
Scenario load_scenario(std::string_view config_text);
Scenario load_scenario_file(const std::filesystem::path& path);

// Emits a config that load_scenario maps back to an identical Scenario.
std::string serialize(const Scenario& scenario);

// FNV-1a over the serialized form.
std::uint64_t scenario_hash(const Scenario& scenario);

void validate(const Scenario& scenario);

std::vector<AntennaElement> place_antennas(const RoomGeometry& room, int num_antennas,
                                           double mount_height_m,
                                           Topology topology = Topology::kUlaFourWalls,
                                           bool rotate_90 = false);

// Uniform over the floor plan at a fixed height, rejection-sampled to keep
// d_min from every antenna.
std::vector<UserPosition> place_users(const RoomGeometry& room, int num_users, double d_min_m,
                                      double user_height_m,
                                      std::span<const AntennaElement> antennas, Rng& rng);

// Per-wall element counts, proportional to wall length via largest remainder.
std::vector<int> allocate_per_wall(const RoomGeometry& room, int num_antennas);

std::string_view to_string(ChannelKind k);
std::string_view to_string(CsiKind k);
std::string_view to_string(PrecoderKind k);
std::string_view to_string(LinkDirection d);
std::string_view to_string(PatternKind k);

}  // namespace weavesim
