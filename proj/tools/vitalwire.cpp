// Copyright (c) 2026 The Vitalwire Authors
// SPDX-License-Identifier: Apache-2.0
//
// vitalwire: command-line front end for the monitor data plane.
// Subcommands and file formats are documented in docs/cli.md.

#include <CLI11.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vitalwire/ats_codec.hpp"
#include "vitalwire/badge.hpp"
#include "vitalwire/cryptarchive.hpp"
#include "vitalwire/ecg_id.hpp"
#include "vitalwire/gateway.hpp"
#include "vitalwire/telemetry.hpp"
#include "vitalwire/wire_protocol.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitUsage = 2;

std::vector<std::uint8_t> read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw vitalwire::Error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in),
          std::istreambuf_iterator<char>()};
}

// Integer samples, one or more per line, separated by commas or blanks.
std::vector<long> read_int_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw vitalwire::Error("cannot open " + path);
  std::vector<long> values;
  std::string line;
  while (std::getline(in, line)) {
    for (char& c : line) {
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    }
    std::istringstream fields(line);
    std::string token;
    bool numeric_line = true;
    std::vector<long> row;
    while (fields >> token) {
      try {
        std::size_t used = 0;
        row.push_back(std::stol(token, &used));
        if (used != token.size()) numeric_line = false;
      } catch (const std::exception&) {
        numeric_line = false;
      }
    }
    if (!numeric_line) continue;  // header or comment line
    values.insert(values.end(), row.begin(), row.end());
  }
  return values;
}

std::vector<double> read_ecg_mv(const std::string& path) {
  std::vector<double> mv;
  for (long raw : read_int_csv(path)) {
    mv.push_back(vitalwire::telemetry::raw_to_mv(static_cast<int>(raw)));
  }
  return mv;
}

// trace.csv rows: sample_index,x,y,z  (the index column is optional)
std::vector<std::uint8_t> read_acc_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw vitalwire::Error("cannot open " + path);
  std::vector<std::uint8_t> xyz;
  std::string line;
  while (std::getline(in, line)) {
    for (char& c : line) {
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    }
    std::istringstream fields(line);
    std::vector<long> row;
    std::string token;
    bool numeric_line = true;
    while (fields >> token) {
      try {
        row.push_back(std::stol(token));
      } catch (const std::exception&) {
        numeric_line = false;
        break;
      }
    }
    if (!numeric_line || row.empty()) continue;
    if (row.size() == 4) row.erase(row.begin());  // drop sample_index
    if (row.size() != 3) {
      throw vitalwire::telemetry::IncompleteTriplet(
          "trace rows need x,y,z (optionally preceded by an index)");
    }
    for (long v : row) {
      if (v < 0 || v > 255) {
        throw vitalwire::telemetry::OutOfRange("raw sample outside 0..255");
      }
      xyz.push_back(static_cast<std::uint8_t>(v));
    }
  }
  return xyz;
}

std::string default_store() {
  if (const char* env = std::getenv("VITALWIRE_STORE")) return env;
  return "profiles.txt";
}

int send_stream(const std::string& host, std::uint16_t port,
                const std::vector<std::uint8_t>& data, std::size_t chunk) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw vitalwire::Error("socket failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw vitalwire::Error("not an IPv4 address: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw vitalwire::gateway::DownstreamUnreachable("connect " + host + ":" +
                                                    std::to_string(port));
  }
  std::size_t pos = 0, chunks = 0;
  while (pos < data.size()) {
    const std::size_t len = std::min(chunk, data.size() - pos);
    if (::send(fd, data.data() + pos, len, MSG_NOSIGNAL) !=
        static_cast<ssize_t>(len)) {
      ::close(fd);
      throw vitalwire::gateway::MidStreamDisconnect("send failed");
    }
    pos += len;
    ++chunks;
  }
  ::close(fd);
  std::cout << "sent bytes=" << data.size() << " chunks=" << chunks << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------ wire

int cmd_wire_decode(const std::string& input, bool verify) {
  using namespace vitalwire::wire;
  StreamParser parser({.verify_checksum = verify});
  const auto packets = parser.feed(read_binary(input));
  for (const auto& p : packets) {
    std::cout << "packet seq=" << p.header.sequence
              << " battery=" << p.header.battery_percent() << "%"
              << " event=" << (p.header.event_flag ? 1 : 0)
              << " ecg=" << p.ecg.samples.size() << "@"
              << sample_rate_hz(p.ecg.format) << "Hz"
              << " acc_triplets=" << p.acc.samples.size() / 3
              << " checksum=" << (p.checksum_ok ? "ok" : "BAD") << "\n";
  }
  const auto& s = parser.stats();
  std::cout << "stats packets_ok=" << s.packets_ok
            << " checksum_failures=" << s.checksum_failures
            << " resyncs=" << s.resyncs
            << " sequence_gaps=" << s.sequence_gaps
            << " leftover_bytes=" << parser.buffered_bytes() << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- ats

int cmd_ats_dump(const std::string& path) {
  using namespace vitalwire::ats;
  const AtsFile file = decode_ats(read_binary(path));
  const auto& h = file.header;
  std::cout << "ats header_len=" << h.header_len
            << " channels=" << static_cast<int>(h.channels)
            << " blocks_declared=" << h.num_data_blocks
            << " block_len=" << h.block_len << " date=" << h.date.year << "-"
            << static_cast<int>(h.date.month) << "-"
            << static_cast<int>(h.date.day) << " time="
            << static_cast<int>(h.time.hour) << ":"
            << static_cast<int>(h.time.minute) << ":"
            << static_cast<int>(h.time.second) << "\n";
  for (std::size_t c = 0; c < file.channel_descs.size(); ++c) {
    const auto& desc = file.channel_descs[c];
    std::cout << "channel " << c << " type=0x" << std::hex
              << static_cast<int>(desc.data_type) << std::dec << " format=0x"
              << std::hex << static_cast<int>(desc.data_format) << std::dec
              << " packet_len=" << desc.packet_len;
    if (const auto rate = sample_rate_hz(desc)) {
      std::cout << " rate=" << *rate << "Hz";
    }
    std::cout << "\n";
  }
  std::cout << "blocks=" << file.blocks.size()
            << " trailing_partial_bytes=" << file.trailing_partial_bytes
            << "\n";
  return kExitOk;
}

int cmd_ats_extract(const std::string& path, std::size_t channel) {
  using namespace vitalwire::ats;
  const AtsFile file = decode_ats(read_binary(path));
  if (channel < file.channel_descs.size() &&
      file.channel_descs[channel].data_type == ChannelType::Acc3) {
    for (const auto& t : acc_triplets(file, channel)) {
      std::cout << static_cast<int>(t[0]) << "," << static_cast<int>(t[1])
                << "," << static_cast<int>(t[2]) << "\n";
    }
  } else {
    for (std::uint8_t v : samples(file, channel)) {
      std::cout << static_cast<int>(v) << "\n";
    }
  }
  return kExitOk;
}

// ------------------------------------------------------------- telemetry

int cmd_heart_rate(const std::string& input, double rate) {
  const auto mv = read_ecg_mv(input);
  const auto bpm = vitalwire::telemetry::heart_rate(mv, rate);
  if (bpm.empty()) {
    std::cout << "no heart rate (fewer than two beats)\n";
    return kExitOk;
  }
  double sum = 0;
  for (double v : bpm) {
    std::cout << v << "\n";
    sum += v;
  }
  std::cout << "mean_bpm=" << sum / bpm.size() << " beats=" << bpm.size() + 1
            << "\n";
  return kExitOk;
}

int cmd_detect_falls(const std::string& input,
                     const vitalwire::telemetry::FallDetectorConfig& config) {
  using vitalwire::telemetry::Axis;
  const auto xyz = read_acc_csv(input);
  const auto events = vitalwire::telemetry::detect_falls(xyz, config);
  for (const auto& ev : events) {
    const char axis = ev.trigger_axis == Axis::X   ? 'X'
                      : ev.trigger_axis == Axis::Y ? 'Y'
                                                   : 'Z';
    std::cout << "fall axis=" << axis << " sample_index=" << ev.sample_index
              << " baseline=" << ev.baseline_raw
              << " extremum=" << ev.extremum_raw
              << " window_mean=" << ev.window_mean
              << " confirmed=" << (ev.confirmed ? "yes" : "no") << "\n";
  }
  std::cout << "events=" << events.size() << " samples=" << xyz.size() / 3
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- ecg id

int cmd_enroll(const std::string& input, const std::string& id, double rate,
               const std::string& store_path, bool replace) {
  using namespace vitalwire::ecg;
  ProfileStore store;
  if (std::ifstream(store_path).good()) {
    store = ProfileStore::load(store_path);
  }
  const auto mv = read_ecg_mv(input);
  const auto beats = extract_accepted_features(mv, rate);
  store.enroll(id, beats, replace);
  store.save(store_path);
  std::cout << "enrolled " << id << " beats=" << beats.size() << " store="
            << store_path << "\n";
  return kExitOk;
}

int cmd_identify(const std::string& input, double rate,
                 const std::string& store_path, bool vote) {
  using namespace vitalwire::ecg;
  const ProfileStore store = ProfileStore::load(store_path);
  const auto beats = extract_accepted_features(read_ecg_mv(input), rate);
  if (beats.empty()) throw NoBeatsFound("no clean beats in " + input);
  const auto [person, distance] = store.identify(beats, vote);
  std::cout << "person=" << person << " distance=" << distance
            << " beats=" << beats.size() << "\n";
  return kExitOk;
}

int cmd_verify(const std::string& input, const std::string& id,
               double threshold, double rate, const std::string& store_path) {
  using namespace vitalwire::ecg;
  const ProfileStore store = ProfileStore::load(store_path);
  const auto beats = extract_accepted_features(read_ecg_mv(input), rate);
  if (beats.empty()) throw NoBeatsFound("no clean beats in " + input);
  const double distance = mahalanobis(mean_vector(beats), store.profile(id));
  const bool accepted = store.verify(id, beats, threshold);
  std::cout << "verified=" << (accepted ? "yes" : "no")
            << " distance=" << distance << " threshold=" << threshold << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------- badge

vitalwire::badge::FormatRegistry load_registry(const std::string& file) {
  auto registry = vitalwire::badge::FormatRegistry::with_builtins();
  if (!file.empty()) registry.load_file(file);
  return registry;
}

const vitalwire::badge::BadgeFormat& pick_format(
    const vitalwire::badge::FormatRegistry& registry,
    const std::string& name) {
  const auto* format = registry.find(name);
  if (!format) {
    throw vitalwire::badge::InvalidFormat("unknown format: " + name);
  }
  return *format;
}

// ----------------------------------------------------------------- access

struct ScriptEvent {
  enum class Kind { Read, Pass } kind;
  std::string badge_id;
  std::string password;
  std::uint64_t time_ms;
};

std::vector<ScriptEvent> read_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw vitalwire::Error("cannot open " + path);
  std::vector<ScriptEvent> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string verb;
    fields >> verb;
    ScriptEvent ev{};
    if (verb == "READ") {
      ev.kind = ScriptEvent::Kind::Read;
      if (!(fields >> ev.badge_id >> ev.time_ms)) {
        throw vitalwire::Error("script line " + std::to_string(lineno) +
                               ": expected `READ <id> <t_ms>`");
      }
    } else if (verb == "PASS") {
      ev.kind = ScriptEvent::Kind::Pass;
      if (!(fields >> ev.badge_id >> ev.password >> ev.time_ms)) {
        throw vitalwire::Error("script line " + std::to_string(lineno) +
                               ": expected `PASS <id> <pw> <t_ms>`");
      }
    } else {
      throw vitalwire::Error("script line " + std::to_string(lineno) +
                             ": unknown verb " + verb);
    }
    events.push_back(std::move(ev));
  }
  return events;
}

int cmd_access_simulate(const std::string& script_path,
                        const std::string& db_path, unsigned debounce_ms) {
  using namespace vitalwire::gateway;
  AccessSession session(debounce_ms);
  if (!db_path.empty()) session.load_db(db_path);
  for (const auto& ev : read_script(script_path)) {
    std::string action;
    if (ev.kind == ScriptEvent::Kind::Read) {
      action = to_string(session.handle_badge(ev.badge_id, ev.time_ms));
      std::cout << "t=" << ev.time_ms << " READ " << ev.badge_id << " -> "
                << action << "\n";
    } else {
      try {
        action = to_string(session.handle_password(ev.badge_id, ev.password));
      } catch (const OutOfOrder&) {
        action = "OutOfOrder";
      }
      std::cout << "t=" << ev.time_ms << " PASS " << ev.badge_id << " -> "
                << action << "\n";
    }
  }
  std::cout << "state=" << to_string(session.state()) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vitalwire: heart-monitor protocol, telemetry, ECG "
               "identification, badges, encrypted archive and gateway tools"};
  app.set_version_flag("--version", "vitalwire 0.1.0");
  app.require_subcommand(1);

  int exit_code = kExitOk;
  std::function<int()> run;

  // wire
  auto* wire = app.add_subcommand("wire", "packet codec and stream tools");
  wire->require_subcommand(1);
  {
    auto* decode = wire->add_subcommand("decode", "decode a capture file");
    auto input = std::make_shared<std::string>();
    auto skip = std::make_shared<bool>(false);
    decode->add_option("--input", *input, "binary capture")->required();
    decode->add_flag("--no-verify-checksum", *skip,
                     "accept frames regardless of checksum");
    decode->callback(
        [&, input, skip] { run = [=] { return cmd_wire_decode(*input, !*skip); }; });

    auto* replay = wire->add_subcommand("replay",
                                        "send a capture to a TCP endpoint");
    auto rinput = std::make_shared<std::string>();
    auto host = std::make_shared<std::string>("127.0.0.1");
    auto port = std::make_shared<std::uint16_t>(9999);
    auto chunk = std::make_shared<std::size_t>(143);
    replay->add_option("--input", *rinput, "binary capture")->required();
    replay->add_option("--host", *host, "destination host");
    replay->add_option("--port", *port, "destination port");
    replay->add_option("--chunk", *chunk, "write size in bytes");
    replay->callback([&, rinput, host, port, chunk] {
      run = [=] { return send_stream(*host, *port, read_binary(*rinput), *chunk); };
    });
  }

  // ats
  auto* ats = app.add_subcommand("ats", "ATS recording files");
  ats->require_subcommand(1);
  {
    auto* dump = ats->add_subcommand("dump", "print header and channels");
    auto path = std::make_shared<std::string>();
    dump->add_option("file", *path, ".ats file")->required();
    dump->callback([&, path] { run = [=] { return cmd_ats_dump(*path); }; });

    auto* extract = ats->add_subcommand("extract", "emit one channel's "
                                                   "samples as text");
    auto epath = std::make_shared<std::string>();
    auto channel = std::make_shared<std::size_t>(0);
    extract->add_option("file", *epath, ".ats file")->required();
    extract->add_option("--channel", *channel, "channel index")->required();
    extract->callback([&, epath, channel] {
      run = [=] { return cmd_ats_extract(*epath, *channel); };
    });
  }

  // telemetry
  {
    auto* hr = app.add_subcommand("heart-rate", "beats per minute from an "
                                                "ECG csv (raw 0..255)");
    auto input = std::make_shared<std::string>();
    auto rate = std::make_shared<double>(300.0);
    hr->add_option("--input", *input, "csv of raw samples")->required();
    hr->add_option("--rate", *rate, "sample rate, 150 or 300");
    hr->callback([&, input, rate] {
      run = [=] { return cmd_heart_rate(*input, *rate); };
    });

    auto* falls = app.add_subcommand("detect-falls",
                                     "fall events from an accelerometer csv");
    auto finput = std::make_shared<std::string>();
    auto config = std::make_shared<vitalwire::telemetry::FallDetectorConfig>();
    falls->add_option("--input", *finput, "csv: sample_index,x,y,z")
        ->required();
    falls->add_option("--window", config->window, "post-variation window");
    falls->add_option("--threshold", config->delta_threshold,
                      "raw-count threshold");
    falls->add_option("--hold", config->hold_seconds,
                      "horizontal hold seconds to confirm");
    falls->add_option("--rate", config->sample_rate_hz, "sample rate (Hz)");
    falls->callback([&, finput, config] {
      run = [=] { return cmd_detect_falls(*finput, *config); };
    });
  }

  // ecg identification
  {
    auto store = std::make_shared<std::string>(default_store());
    auto rate = std::make_shared<double>(300.0);

    auto* enroll = app.add_subcommand("enroll", "store a person's profile");
    auto einput = std::make_shared<std::string>();
    auto eid = std::make_shared<std::string>();
    auto replace = std::make_shared<bool>(false);
    enroll->add_option("--input", *einput, "csv of raw ECG samples")
        ->required();
    enroll->add_option("--id", *eid, "person id")->required();
    enroll->add_option("--store", *store, "profile store path");
    enroll->add_option("--rate", *rate, "sample rate");
    enroll->add_flag("--replace", *replace, "overwrite an existing profile");
    enroll->callback([&, einput, eid, store, rate, replace] {
      run = [=] { return cmd_enroll(*einput, *eid, *rate, *store, *replace); };
    });

    auto* identify = app.add_subcommand("identify",
                                        "nearest enrolled profile");
    auto iinput = std::make_shared<std::string>();
    auto vote = std::make_shared<bool>(false);
    identify->add_option("--input", *iinput, "csv of raw ECG samples")
        ->required();
    identify->add_option("--store", *store, "profile store path");
    identify->add_option("--rate", *rate, "sample rate");
    identify->add_flag("--vote", *vote, "per-beat majority vote");
    identify->callback([&, iinput, store, rate, vote] {
      run = [=] { return cmd_identify(*iinput, *rate, *store, *vote); };
    });

    auto* verify = app.add_subcommand("verify", "check a claimed identity");
    auto vinput = std::make_shared<std::string>();
    auto vid = std::make_shared<std::string>();
    // chi-squared 99th percentile for 24 degrees of freedom
    auto threshold = std::make_shared<double>(6.556);
    verify->add_option("--input", *vinput, "csv of raw ECG samples")
        ->required();
    verify->add_option("--id", *vid, "claimed person id")->required();
    verify->add_option("--threshold", *threshold, "acceptance distance");
    verify->add_option("--store", *store, "profile store path");
    verify->add_option("--rate", *rate, "sample rate");
    verify->callback([&, vinput, vid, threshold, store, rate] {
      run = [=] {
        return cmd_verify(*vinput, *vid, *threshold, *rate, *store);
      };
    });
  }

  // badge
  auto* badge = app.add_subcommand("badge", "RFID badge formats");
  badge->require_subcommand(1);
  {
    auto formats_file = std::make_shared<std::string>();
    auto format_name = std::make_shared<std::string>("std26");

    auto* encode = badge->add_subcommand("encode", "facility/id to a card "
                                                   "word");
    auto facility = std::make_shared<std::uint64_t>(0);
    auto id = std::make_shared<std::uint64_t>(0);
    encode->add_option("--facility", *facility, "facility code");
    encode->add_option("--id", *id, "card id")->required();
    encode->add_option("--format", *format_name, "format name");
    encode->add_option("--formats-file", *formats_file, "format registry");
    encode->callback([&, facility, id, format_name, formats_file] {
      run = [=] {
        using namespace vitalwire::badge;
        const auto registry = load_registry(*formats_file);
        const BadgeFormat& format = pick_format(registry, *format_name);
        const BitVector bits = encode_bits(*facility, *id, format);
        std::cout << "bits=" << bits.size() << " hex=0x" << bits_to_hex(bits)
                  << "\n";
        return kExitOk;
      };
    });

    auto* decode = badge->add_subcommand("decode", "card word to "
                                                   "facility/id");
    auto hex = std::make_shared<std::string>();
    auto lead = std::make_shared<std::string>();
    auto trail = std::make_shared<std::string>();
    auto hide = std::make_shared<bool>(false);
    auto with_fac = std::make_shared<bool>(false);
    auto delim = std::make_shared<std::string>(":");
    decode->add_option("--bits", *hex, "card word in hex")->required();
    decode->add_option("--format", *format_name, "format name");
    decode->add_option("--formats-file", *formats_file, "format registry");
    decode->add_option("--lead", *lead, "lead characters (max 3)");
    decode->add_option("--trail", *trail, "trail characters");
    decode->add_flag("--hide-id", *hide, "mask the id in the rendering");
    decode->add_flag("--send-facility", *with_fac,
                     "prefix the facility code");
    decode->add_option("--delimiter", *delim, "facility/id delimiter");
    decode->callback([&, hex, format_name, formats_file, lead, trail, hide,
                      with_fac, delim] {
      run = [=] {
        using namespace vitalwire::badge;
        const auto registry = load_registry(*formats_file);
        const BadgeFormat& format = pick_format(registry, *format_name);
        const Credential cred =
            decode_bits(bits_from_hex(*hex, format.total_bits()), format);
        ReaderConfig config;
        config = set_lead_chars(config, *lead);
        config = set_trail_chars(config, *trail);
        config.hide_id = *hide;
        config.send_facility = *with_fac;
        config.delimiter = *delim;
        std::cout << "facility=" << cred.facility_code
                  << " id=" << cred.card_id << " bits=" << cred.bit_count
                  << " rendered=" << render_output(cred, config) << "\n";
        return kExitOk;
      };
    });
  }

  // archive
  {
    auto* crypt = app.add_subcommand("crypt", "archive a tree into an "
                                              "encrypted Structure file");
    auto root = std::make_shared<std::string>();
    auto key = std::make_shared<std::string>();
    auto key2 = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>(
        vitalwire::archive::kDefaultArchiveName);
    auto remove = std::make_shared<bool>(false);
    crypt->add_option("--root", *root, "directory to archive")->required();
    crypt->add_option("--key", *key, "data key")->required();
    crypt->add_option("--structure-key", *key2,
                      "extra key for the whole file (may differ)");
    crypt->add_option("--out", *out, "archive path");
    crypt->add_flag("--remove", *remove, "delete the original tree");
    crypt->callback([&, root, key, key2, out, remove] {
      run = [=] {
        using namespace vitalwire::archive;
        crypt_data(*root, *key, {.archive = *out, .remove_sources = *remove});
        if (!key2->empty()) crypt_file_structure(*key2, *out);
        std::cout << "archived " << *root << " -> " << *out << "\n";
        return kExitOk;
      };
    });

    auto* restore = app.add_subcommand("restore", "rebuild a tree from a "
                                                  "Structure file");
    auto rkey = std::make_shared<std::string>();
    auto rkey2 = std::make_shared<std::string>();
    auto rout = std::make_shared<std::string>(
        vitalwire::archive::kDefaultArchiveName);
    auto rroot = std::make_shared<std::string>(".");
    restore->add_option("--key", *rkey, "data key")->required();
    restore->add_option("--structure-key", *rkey2,
                        "whole-file key used at crypt time");
    restore->add_option("--out", *rout, "archive path");
    restore->add_option("--root", *rroot, "directory to restore into");
    restore->callback([&, rkey, rkey2, rout, rroot] {
      run = [=] {
        using namespace vitalwire::archive;
        if (!rkey2->empty()) crypt_file_structure(*rkey2, *rout);
        restore_data(*rkey, {.archive = *rout, .out_root = *rroot});
        std::cout << "restored " << *rout << " -> " << *rroot << "\n";
        return kExitOk;
      };
    });
  }

  // forwarder
  {
    auto* forward = app.add_subcommand("forward", "chunk a stream towards a "
                                                  "downstream socket");
    auto input = std::make_shared<std::string>();
    auto listen_host = std::make_shared<std::string>("127.0.0.1");
    auto listen_port = std::make_shared<std::uint16_t>(0);
    auto down = std::make_shared<std::string>();
    auto chunk = std::make_shared<std::size_t>(143);
    forward->add_option("--input", *input,
                        "read the upstream from a file instead of a socket");
    forward->add_option("--listen-host", *listen_host, "listen address");
    forward->add_option("--listen-port", *listen_port,
                        "listen port (0 = ephemeral)");
    forward->add_option("--downstream", *down, "host:port (default port "
                                               "9999); omit to count only");
    forward->add_option("--chunk", *chunk, "chunk size in bytes");
    forward->callback([&, input, listen_host, listen_port, down, chunk] {
      run = [=] {
        using namespace vitalwire::gateway;
        std::string host = "127.0.0.1";
        std::uint16_t port = 9999;
        if (!down->empty()) {
          const auto colon = down->rfind(':');
          if (colon == std::string::npos) {
            host = *down;
          } else {
            host = down->substr(0, colon);
            port = static_cast<std::uint16_t>(
                std::stoul(down->substr(colon + 1)));
          }
        }
        if (!input->empty()) {
          const auto data = read_binary(*input);
          ForwarderStats stats;
          if (down->empty()) {
            stats = forward_buffer(data, *chunk, nullptr);
          } else {
            const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
            sockaddr_in addr{};
            addr.sin_family = AF_INET;
            addr.sin_port = htons(port);
            if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1 ||
                ::connect(fd, reinterpret_cast<sockaddr*>(&addr),
                          sizeof(addr)) != 0) {
              ::close(fd);
              throw DownstreamUnreachable("connect " + host + ":" +
                                          std::to_string(port));
            }
            stats = forward_buffer(
                data, *chunk, [fd](std::span<const std::uint8_t> piece) {
                  if (::send(fd, piece.data(), piece.size(), MSG_NOSIGNAL) !=
                      static_cast<ssize_t>(piece.size())) {
                    throw MidStreamDisconnect("downstream send failed");
                  }
                });
            ::close(fd);
          }
          std::cout << "chunks=" << stats.full_chunks
                    << " partial=" << stats.partial_chunk_bytes
                    << " bytes=" << stats.bytes_in << "\n";
          return kExitOk;
        }
        ForwarderConfig config;
        config.listen_host = *listen_host;
        config.listen_port = *listen_port;
        config.downstream_host = host;
        config.downstream_port = port;
        config.chunk_size = *chunk;
        ChunkForwarder forwarder(config);
        std::cout << "listening on " << *listen_host << ":"
                  << forwarder.listen_port() << ", forwarding to " << host
                  << ":" << port << " in " << *chunk << "-byte chunks\n";
        const ForwarderStats stats = forwarder.run_once();
        std::cout << "chunks=" << stats.full_chunks
                  << " partial=" << stats.partial_chunk_bytes
                  << " bytes=" << stats.bytes_in
                  << (stats.midstream_disconnect ? " midstream_disconnect"
                                                 : "")
                  << "\n";
        return kExitOk;
      };
    });
  }

  // access control
  auto* access = app.add_subcommand("access", "lock/unlock session tools");
  access->require_subcommand(1);
  {
    auto* simulate = access->add_subcommand(
        "simulate", "run a badge/password event script");
    auto script = std::make_shared<std::string>();
    auto db = std::make_shared<std::string>();
    auto debounce = std::make_shared<unsigned>(900);
    simulate->add_option("--script", *script, "event script")->required();
    simulate->add_option("--access-db", *db, "enrollment file");
    simulate->add_option("--debounce-ms", *debounce,
                         "ValidDataTime (min 900)");
    simulate->callback([&, script, db, debounce] {
      run = [=] { return cmd_access_simulate(*script, *db, *debounce); };
    });

    auto* aenroll = access->add_subcommand("enroll", "add a badge to the "
                                                     "enrollment file");
    auto aid = std::make_shared<std::string>();
    auto mode = std::make_shared<std::string>("simple");
    auto password = std::make_shared<std::string>();
    auto adb = std::make_shared<std::string>();
    aenroll->add_option("--id", *aid, "badge id")->required();
    aenroll->add_option("--mode", *mode, "simple or strong")
        ->check(CLI::IsMember({"simple", "strong"}));
    aenroll->add_option("--password", *password,
                        "password (strong mode only)");
    aenroll->add_option("--access-db", *adb, "enrollment file")->required();
    aenroll->callback([&, aid, mode, password, adb] {
      run = [=] {
        using namespace vitalwire::gateway;
        AccessSession session;
        if (std::ifstream(*adb).good()) session.load_db(*adb);
        session.enroll(*aid,
                       *mode == "strong" ? AccessMode::Strong
                                         : AccessMode::Simple,
                       *password);
        session.save_db(*adb);
        std::cout << "enrolled " << *aid << " (" << *mode << ")\n";
        return kExitOk;
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    std::cerr << app.help() << "\n";
    return kExitUsage;
  }

  try {
    if (run) exit_code = run();
  } catch (const vitalwire::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return exit_code;
}
