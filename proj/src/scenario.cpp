#include "weavesim/scenario.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "weavesim/config_text.hpp"

namespace weavesim {

bool RoomGeometry::contains(const Vec3& p, bool strict) const {
  if (strict) {
    return p.x() > 0.0 && p.x() < length && p.y() > 0.0 && p.y() < width && p.z() > 0.0 &&
           p.z() < height;
  }
  constexpr double kTol = 1e-9;
  return p.x() >= -kTol && p.x() <= length + kTol && p.y() >= -kTol && p.y() <= width + kTol &&
         p.z() >= -kTol && p.z() <= height + kTol;
}

int RadioConfig::num_subcarriers() const {
  return static_cast<int>(std::llround(signal_bw_hz / subcarrier_bw_hz));
}

double patch_width_design_rule(double carrier_freq_hz, double epsilon_r) {
  return kSpeedOfLight / (2.0 * carrier_freq_hz) * std::sqrt(2.0 / (epsilon_r + 1.0));
}

double Scenario::patch_width_m() const {
  return pattern.patch_w_m.value_or(patch_width_design_rule(radio.carrier_freq_hz, pattern.epsilon_r));
}

std::string_view to_string(ChannelKind k) { return k == ChannelKind::kLos ? "los" : "rayleigh"; }
std::string_view to_string(CsiKind k) { return k == CsiKind::kPerfect ? "perfect" : "ls"; }
std::string_view to_string(PrecoderKind k) { return k == PrecoderKind::kMrt ? "mrt" : "zf"; }
std::string_view to_string(LinkDirection d) {
  return d == LinkDirection::kDownlink ? "downlink" : "uplink";
}
std::string_view to_string(PatternKind k) { return k == PatternKind::kOmni ? "omni" : "patch"; }

// ---------------------------------------------------------------------------
// Placement

namespace {

struct Wall {
  Vec3 origin;   // start corner at floor level
  Vec3 tangent;  // unit, along the wall
  Vec3 normal;   // unit, pointing into the room
  double length;
};

// Walls in counter-clockwise order seen from above: y=0, x=L, y=W, x=0.
std::array<Wall, 4> walls_of(const RoomGeometry& r) {
  return {{
      {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), r.length},
      {Vec3(r.length, 0, 0), Vec3(0, 1, 0), Vec3(-1, 0, 0), r.width},
      {Vec3(r.length, r.width, 0), Vec3(-1, 0, 0), Vec3(0, -1, 0), r.length},
      {Vec3(0, r.width, 0), Vec3(0, -1, 0), Vec3(1, 0, 0), r.width},
  }};
}

}  // namespace

std::vector<int> allocate_per_wall(const RoomGeometry& room, int num_antennas) {
  const auto walls = walls_of(room);
  std::vector<int> counts(walls.size(), 0);
  std::vector<double> remainder(walls.size(), 0.0);
  int assigned = 0;
  for (std::size_t w = 0; w < walls.size(); ++w) {
    double quota = num_antennas * walls[w].length / room.perimeter();
    counts[w] = static_cast<int>(std::floor(quota));
    remainder[w] = quota - counts[w];
    assigned += counts[w];
  }
  std::vector<std::size_t> order(walls.size());
  std::iota(order.begin(), order.end(), 0);
  // Largest remainder first; lower wall index wins ties.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < num_antennas; ++i, ++assigned) ++counts[order[i % order.size()]];
  return counts;
}

std::vector<AntennaElement> place_antennas(const RoomGeometry& room, int num_antennas,
                                           double mount_height_m, Topology topology,
                                           bool rotate_90) {
  if (topology != Topology::kUlaFourWalls) throw ValidationError("unsupported antenna topology");
  if (num_antennas < 4) {
    throw ValidationError("num_antennas = " + std::to_string(num_antennas) +
                          " < 4 walls for ula_four_walls");
  }
  const auto walls = walls_of(room);
  const auto counts = allocate_per_wall(room, num_antennas);
  std::vector<AntennaElement> out;
  out.reserve(num_antennas);
  for (std::size_t w = 0; w < walls.size(); ++w) {
    const Wall& wall = walls[w];
    const Vec3 x = wall.normal;
    const Vec3 z = rotate_90 ? wall.tangent : Vec3(0, 0, 1);
    const Vec3 y = z.cross(x);
    for (int i = 0; i < counts[w]; ++i) {
      AntennaElement a;
      a.wall = static_cast<int>(w);
      a.wall_offset = wall.length * (i + 1) / (counts[w] + 1);
      a.position = wall.origin + wall.tangent * a.wall_offset + Vec3(0, 0, mount_height_m);
      a.basis.col(0) = x;
      a.basis.col(1) = y;
      a.basis.col(2) = z;
      out.push_back(a);
    }
  }
  return out;
}

std::vector<UserPosition> place_users(const RoomGeometry& room, int num_users, double d_min_m,
                                      double user_height_m,
                                      std::span<const AntennaElement> antennas, Rng& rng) {
  constexpr long kMaxRejections = 1'000'000;
  if (num_users < 0) throw ValidationError("num_users must be >= 0");
  if (!(user_height_m > 0.0 && user_height_m < room.height)) {
    throw ValidationError("user_height_m must lie strictly inside the room height");
  }
  std::uniform_real_distribution<double> ux(0.0, room.length);
  std::uniform_real_distribution<double> uy(0.0, room.width);
  std::vector<UserPosition> users;
  users.reserve(num_users);
  long rejections = 0;
  const double d2 = d_min_m * d_min_m;
  while (static_cast<int>(users.size()) < num_users) {
    Vec3 p(ux(rng), uy(rng), user_height_m);
    bool ok = room.contains(p, true);
    for (std::size_t m = 0; ok && m < antennas.size(); ++m) {
      ok = (antennas[m].position - p).squaredNorm() >= d2;
    }
    if (ok) {
      users.push_back({p});
    } else if (++rejections > kMaxRejections) {
      throw SimulationError("place_users: rejection cap of 1e6 exceeded");
    }
  }
  return users;
}

// ---------------------------------------------------------------------------
// Validation

void validate(const Scenario& s) {
  const auto& r = s.room;
  if (!(r.length > 0 && r.width > 0 && r.height > 0)) {
    throw ValidationError("room dimensions must be > 0");
  }
  const int m = s.num_antennas();
  const int k = s.num_users();
  const auto& radio = s.radio;

  if (!(radio.carrier_freq_hz > 0)) throw ValidationError("carrier_freq_hz must be > 0");
  if (!(radio.signal_bw_hz > 0 && radio.subcarrier_bw_hz > 0)) {
    throw ValidationError("bandwidths must be > 0");
  }
  double ratio = radio.signal_bw_hz / radio.subcarrier_bw_hz;
  if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw ValidationError(
        "signal_bandwidth_hz is not an integer multiple of subcarrier_bandwidth_hz");
  }
  if (!(radio.rho_dl_w > 0 && radio.rho_ul_w > 0 && radio.pilot_power_w > 0)) {
    throw ValidationError("all powers must be > 0");
  }
  if (!(radio.temperature_k > 0)) throw ValidationError("temperature_k must be > 0");
  if (!(radio.boltzmann > 0)) throw ValidationError("boltzmann_j_per_k must be > 0");
  if (radio.tau_p < k) throw ValidationError("tau_p < K");
  if (radio.tau_c < radio.tau_p) throw ValidationError("tau_c < tau_p");
  if (s.coherence_group_size < 1) throw ValidationError("coherence_group_size must be >= 1");
  if (!(s.d_min_m > 0)) throw ValidationError("min_distance_m must be > 0");

  if (s.pattern.kind == PatternKind::kPatch) {
    if (!(s.pattern.patch_h_m > 0)) throw ValidationError("patch_h_m must be > 0");
    if (!(s.patch_width_m() > 0)) throw ValidationError("patch_w_m must be > 0");
    if (!(s.pattern.epsilon_r > 0)) throw ValidationError("dielectric_constant must be > 0");
  }

  for (int i = 0; i < m; ++i) {
    const auto& a = s.antennas[i];
    if (!r.contains(a.position, false)) {
      throw ValidationError("antenna " + std::to_string(i) + " lies outside the room");
    }
    for (int c = 0; c < 3; ++c) {
      if (std::abs(a.basis.col(c).norm() - 1.0) > 1e-12) {
        throw ValidationError("antenna " + std::to_string(i) + " local basis is not unit-norm");
      }
      for (int d = c + 1; d < 3; ++d) {
        if (std::abs(a.basis.col(c).dot(a.basis.col(d))) > 1e-12) {
          throw ValidationError("antenna " + std::to_string(i) + " local basis is not orthogonal");
        }
      }
    }
  }
  for (int u = 0; u < k; ++u) {
    const Vec3& p = s.users[u].position;
    if (!r.contains(p, true)) {
      throw ValidationError("user " + std::to_string(u) + " is not strictly inside the room");
    }
    for (int i = 0; i < m; ++i) {
      if ((s.antennas[i].position - p).norm() < s.d_min_m) {
        throw ValidationError("user " + std::to_string(u) + " is closer than min_distance_m to antenna " +
                              std::to_string(i));
      }
    }
  }

  if (static_cast<int>(s.power_control.size()) != k) {
    throw ValidationError("power_control has " + std::to_string(s.power_control.size()) +
                          " entries, expected K = " + std::to_string(k));
  }
  double sum = 0.0;
  for (double eta : s.power_control) {
    if (!(eta >= 0.0)) throw ValidationError("power_control entries must be >= 0");
    if (s.direction == LinkDirection::kUplink && eta > 1.0) {
      throw ValidationError("uplink power_control entry " + config::format_number(eta) + " > 1");
    }
    sum += eta;
  }
  if (s.direction == LinkDirection::kDownlink && sum > 1.0 + 1e-12) {
    std::ostringstream os;
    os << "downlink power control sum(eta) = " << sum << " > 1";
    throw ValidationError(os.str());
  }
  if (s.precoder_kind == PrecoderKind::kZf && m < k) {
    throw ValidationError("zero-forcing requires M >= K (M = " + std::to_string(m) +
                          ", K = " + std::to_string(k) + ")");
  }
}

// ---------------------------------------------------------------------------
// Config text <-> Scenario

namespace {

const std::set<std::string, std::less<>> kKnownKeys = {
    "room_length_m", "room_width_m", "room_height_m", "antenna_deployment", "num_antennas",
    "num_users", "mount_height_m", "user_height_m", "min_distance_m", "user_seed",
    "resample_users_per_drop", "user_positions", "carrier_freq_hz", "signal_bandwidth_hz",
    "subcarrier_bandwidth_hz", "base_station_power_w", "user_power_w", "pilot_power_w",
    "base_station_noise_figure_db", "user_noise_figure_db", "temperature_k", "boltzmann_j_per_k",
    "tau_p", "tau_c", "mobility", "channel_type", "coherence_group_size", "los_frequency_flat",
    "pattern", "dielectric_constant", "patch_h_m", "patch_w_m", "patch_rotate_90", "csi",
    "precoder", "direction", "power_control"};

class Reader {
 public:
  explicit Reader(const config::Table& t) : t_(t) {}

  bool has(std::string_view key) const { return t_.find(key) != t_.end(); }

  const config::Value& raw(std::string_view key) const {
    auto it = t_.find(key);
    if (it == t_.end()) throw ValidationError("missing required key '" + std::string(key) + "'");
    return it->second;
  }

  double number(std::string_view key) const {
    const auto& v = raw(key);
    if (!v.is_number()) type_error(key, "a number");
    return std::get<double>(v.data);
  }
  double number(std::string_view key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  long integer(std::string_view key) const {
    double v = number(key);
    if (v != std::floor(v) || std::abs(v) > 9.007199254740992e15) type_error(key, "an integer");
    return static_cast<long>(v);
  }
  long integer(std::string_view key, long fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  bool boolean(std::string_view key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_bool()) type_error(key, "true or false");
    return std::get<bool>(v.data);
  }

  std::string string(std::string_view key, std::string_view fallback) const {
    if (!has(key)) return std::string(fallback);
    const auto& v = raw(key);
    if (!v.is_string()) type_error(key, "a string");
    return std::get<std::string>(v.data);
  }

  template <class E>
  E choice(std::string_view key, std::string_view fallback,
           std::initializer_list<std::pair<std::string_view, E>> options) const {
    std::string s = string(key, fallback);
    for (const auto& [name, value] : options) {
      if (s == name) return value;
    }
    std::string allowed;
    for (const auto& o : options) allowed += (allowed.empty() ? "" : " | ") + std::string(o.first);
    throw ValidationError("key '" + std::string(key) + "': '" + s + "' is not one of " + allowed);
  }

  std::vector<double> numbers(std::string_view key) const {
    const auto& v = raw(key);
    if (!v.is_array()) type_error(key, "an array of numbers");
    std::vector<double> out;
    for (const auto& item : std::get<config::Array>(v.data)) {
      if (!item.is_number()) type_error(key, "an array of numbers");
      out.push_back(std::get<double>(item.data));
    }
    return out;
  }

  std::vector<Vec3> points(std::string_view key) const {
    const auto& v = raw(key);
    if (!v.is_array()) type_error(key, "an array of [x, y, z] triples");
    std::vector<Vec3> out;
    for (const auto& item : std::get<config::Array>(v.data)) {
      if (!item.is_array()) type_error(key, "an array of [x, y, z] triples");
      const auto& xyz = std::get<config::Array>(item.data);
      if (xyz.size() != 3 || !xyz[0].is_number() || !xyz[1].is_number() || !xyz[2].is_number()) {
        type_error(key, "an array of [x, y, z] triples");
      }
      out.emplace_back(std::get<double>(xyz[0].data), std::get<double>(xyz[1].data),
                       std::get<double>(xyz[2].data));
    }
    return out;
  }

 private:
  [[noreturn]] void type_error(std::string_view key, std::string_view expected) const {
    throw ValidationError("key '" + std::string(key) + "' (line " +
                          std::to_string(raw(key).line) + ") must be " + std::string(expected));
  }

  const config::Table& t_;
};

}  // namespace

Scenario load_scenario(std::string_view config_text) {
  const config::Table table = config::parse(config_text);
  for (const auto& [key, value] : table) {
    if (!kKnownKeys.count(key)) {
      throw ValidationError("unknown key '" + key + "' (line " + std::to_string(value.line) + ")");
    }
  }
  Reader in(table);
  Scenario s;
  s.room = {in.number("room_length_m"), in.number("room_width_m"), in.number("room_height_m")};
  if (!(s.room.length > 0 && s.room.width > 0 && s.room.height > 0)) {
    throw ValidationError("room dimensions must be > 0");
  }
  s.topology = in.choice<Topology>("antenna_deployment", "ula_four_walls",
                                   {{"ula_four_walls", Topology::kUlaFourWalls}});
  if (in.string("mobility", "static") != "static") {
    throw ValidationError("key 'mobility': only \"static\" is supported");
  }
  const long m = in.integer("num_antennas");
  const long k = in.integer("num_users");
  if (k < 0) throw ValidationError("num_users must be >= 0");
  s.mount_height_m = in.number("mount_height_m", s.room.height / 2.0);
  s.user_height_m = in.number("user_height_m", 1.5);
  s.d_min_m = in.number("min_distance_m", 0.5);
  s.user_seed = static_cast<std::uint64_t>(in.integer("user_seed", 1));
  s.resample_users_per_drop = in.boolean("resample_users_per_drop", true);

  auto& radio = s.radio;
  radio.carrier_freq_hz = in.number("carrier_freq_hz", radio.carrier_freq_hz);
  radio.signal_bw_hz = in.number("signal_bandwidth_hz", radio.signal_bw_hz);
  radio.subcarrier_bw_hz = in.number("subcarrier_bandwidth_hz", radio.subcarrier_bw_hz);
  radio.rho_dl_w = in.number("base_station_power_w", radio.rho_dl_w);
  radio.rho_ul_w = in.number("user_power_w", radio.rho_ul_w);
  radio.pilot_power_w = in.number("pilot_power_w", radio.pilot_power_w);
  radio.nf_bs_db = in.number("base_station_noise_figure_db", radio.nf_bs_db);
  radio.nf_ue_db = in.number("user_noise_figure_db", radio.nf_ue_db);
  radio.temperature_k = in.number("temperature_k", radio.temperature_k);
  radio.boltzmann = in.number("boltzmann_j_per_k", radio.boltzmann);
  radio.tau_p = static_cast<int>(in.integer("tau_p", k));
  radio.tau_c = static_cast<int>(in.integer("tau_c", std::max<long>(200, radio.tau_p)));

  s.channel_kind = in.choice<ChannelKind>(
      "channel_type", "los", {{"los", ChannelKind::kLos}, {"rayleigh", ChannelKind::kRayleigh}});
  s.coherence_group_size = static_cast<int>(in.integer("coherence_group_size", 1));
  s.los_frequency_flat = in.boolean("los_frequency_flat", false);

  s.pattern.kind = in.choice<PatternKind>("pattern", "patch",
                                          {{"omni", PatternKind::kOmni}, {"patch", PatternKind::kPatch}});
  s.pattern.epsilon_r = in.number("dielectric_constant", s.pattern.epsilon_r);
  s.pattern.patch_h_m = in.number("patch_h_m", s.pattern.patch_h_m);
  if (in.has("patch_w_m")) s.pattern.patch_w_m = in.number("patch_w_m");
  s.pattern.rotate_90 = in.boolean("patch_rotate_90", false);

  s.csi_kind = in.choice<CsiKind>("csi", "ls", {{"perfect", CsiKind::kPerfect}, {"ls", CsiKind::kLs}});
  s.precoder_kind = in.choice<PrecoderKind>(
      "precoder", "zf",
      {{"mrt", PrecoderKind::kMrt}, {"mrc", PrecoderKind::kMrt}, {"zf", PrecoderKind::kZf}});
  s.direction = in.choice<LinkDirection>(
      "direction", "downlink",
      {{"downlink", LinkDirection::kDownlink}, {"uplink", LinkDirection::kUplink}});

  s.antennas = place_antennas(s.room, static_cast<int>(m), s.mount_height_m, s.topology,
                              s.pattern.rotate_90);
  if (in.has("user_positions")) {
    auto pts = in.points("user_positions");
    if (static_cast<long>(pts.size()) != k) {
      throw ValidationError("user_positions has " + std::to_string(pts.size()) +
                            " entries, expected num_users = " + std::to_string(k));
    }
    for (const auto& p : pts) s.users.push_back({p});
  } else {
    Rng rng = substream(s.user_seed, StreamDomain::kUsers, {~0ULL});
    s.users = place_users(s.room, static_cast<int>(k), s.d_min_m, s.user_height_m, s.antennas, rng);
  }

  if (in.has("power_control")) {
    s.power_control = in.numbers("power_control");
  } else {
    double eta = s.direction == LinkDirection::kDownlink && k > 0 ? 1.0 / static_cast<double>(k) : 1.0;
    s.power_control.assign(k, eta);
  }

  validate(s);
  return s;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return load_scenario(ss.str());
}

std::string serialize(const Scenario& s) {
  using config::format_number;
  using config::quote;
  std::ostringstream os;
  auto num = [&](std::string_view key, double v) { os << key << " = " << format_number(v) << "\n"; };
  auto str = [&](std::string_view key, std::string_view v) { os << key << " = " << quote(v) << "\n"; };
  auto flag = [&](std::string_view key, bool v) { os << key << " = " << (v ? "true" : "false") << "\n"; };

  os << "# room\n";
  num("room_length_m", s.room.length);
  num("room_width_m", s.room.width);
  num("room_height_m", s.room.height);
  os << "\n# deployment\n";
  str("antenna_deployment", "ula_four_walls");
  num("num_antennas", s.num_antennas());
  num("num_users", s.num_users());
  num("mount_height_m", s.mount_height_m);
  num("user_height_m", s.user_height_m);
  num("min_distance_m", s.d_min_m);
  num("user_seed", static_cast<double>(s.user_seed));
  flag("resample_users_per_drop", s.resample_users_per_drop);
  str("mobility", "static");
  os << "\n# radio\n";
  num("carrier_freq_hz", s.radio.carrier_freq_hz);
  num("signal_bandwidth_hz", s.radio.signal_bw_hz);
  num("subcarrier_bandwidth_hz", s.radio.subcarrier_bw_hz);
  num("base_station_power_w", s.radio.rho_dl_w);
  num("user_power_w", s.radio.rho_ul_w);
  num("pilot_power_w", s.radio.pilot_power_w);
  num("base_station_noise_figure_db", s.radio.nf_bs_db);
  num("user_noise_figure_db", s.radio.nf_ue_db);
  num("temperature_k", s.radio.temperature_k);
  num("boltzmann_j_per_k", s.radio.boltzmann);
  num("tau_p", s.radio.tau_p);
  num("tau_c", s.radio.tau_c);
  os << "\n# channel and antennas\n";
  str("channel_type", to_string(s.channel_kind));
  num("coherence_group_size", s.coherence_group_size);
  flag("los_frequency_flat", s.los_frequency_flat);
  str("pattern", to_string(s.pattern.kind));
  num("dielectric_constant", s.pattern.epsilon_r);
  num("patch_h_m", s.pattern.patch_h_m);
  if (s.pattern.patch_w_m) num("patch_w_m", *s.pattern.patch_w_m);
  flag("patch_rotate_90", s.pattern.rotate_90);
  os << "\n# processing\n";
  str("csi", to_string(s.csi_kind));
  str("precoder", to_string(s.precoder_kind));
  str("direction", to_string(s.direction));
  os << "power_control = [";
  for (std::size_t i = 0; i < s.power_control.size(); ++i) {
    os << (i ? ", " : "") << format_number(s.power_control[i]);
  }
  os << "]\n";
  os << "user_positions = [\n";
  for (const auto& u : s.users) {
    os << "  [" << format_number(u.position.x()) << ", " << format_number(u.position.y()) << ", "
       << format_number(u.position.z()) << "],\n";
  }
  os << "]\n";
  return os.str();
}

std::uint64_t scenario_hash(const Scenario& scenario) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize(scenario)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace weavesim
