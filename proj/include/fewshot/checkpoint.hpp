#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fewshot/config.hpp"
#include "fewshot/error.hpp"
#include "fewshot/relation_net.hpp"

namespace fewshot {

// RNCK layout, all integers little-endian:
//   "RNCK" | u16 version | u32 header_len | header JSON (header_len bytes)
//   | u64 parameter_count | parameter_count x f32 in RelationNetParams::tensors() order

inline constexpr std::array<char, 4> kCheckpointMagic = {'R', 'N', 'C', 'K'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  RelationNetParams<float> params;
  TrainConfig train;
  std::string config_digest;

  std::uint64_t episode_seed() const { return train.spec.seed; }
};

namespace detail {

template <typename U>
void put_le(std::ostream& out, U v) {
  char b[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, sizeof b);
}

template <typename U>
U get_le(std::istream& in, const char* what) {
  unsigned char b[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof b)) throw ParseError(std::string("checkpoint truncated in ") + what, 0);
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(b[i]) << (8 * i));
  return v;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const Checkpoint& ck) {
  nlohmann::ordered_json header;
  header["architecture"] = to_json(ck.params.config);
  header["parameter_count"] = ck.params.parameter_count();
  header["config_digest"] = ck.config_digest;
  header["episode_seed"] = ck.episode_seed();
  header["train_config"] = train_to_json(ck.train);
  const std::string text = header.dump();

  out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::put_le<std::uint16_t>(out, kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  detail::put_le<std::uint64_t>(out, ck.params.parameter_count());
  for (auto t : ck.params.tensors())
    for (float v : t) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
}

inline Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kCheckpointMagic)
    throw ParseError("not an RNCK checkpoint (bad magic)", 0);
  const auto version = detail::get_le<std::uint16_t>(in, "version");
  if (version != kCheckpointVersion)
    throw ConfigMismatchError("unsupported checkpoint version " + std::to_string(version));
  const auto header_len = detail::get_le<std::uint32_t>(in, "header length");
  std::string text(header_len, '\0');
  if (!in.read(text.data(), header_len)) throw ParseError("checkpoint truncated in header", 0);

  Checkpoint ck;
  std::uint64_t declared = 0;
  try {
    const auto header = nlohmann::json::parse(text);
    RunConfig run = apply_config_json(RunConfig{}, {{"model", header.at("architecture")}, {"train", header.at("train_config")}});
    ck.params = RelationNetParams<float>(run.net);
    ck.train = run.train;
    ck.config_digest = header.at("config_digest").get<std::string>();
    declared = header.at("parameter_count").get<std::uint64_t>();
    if (header.at("episode_seed").get<std::uint64_t>() != ck.train.spec.seed)
      throw ParseError("checkpoint episode_seed disagrees with train_config", 0);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint header: ") + e.what(), 0);
  } catch (const InvalidInputError& e) {
    throw ParseError(std::string("bad checkpoint header: ") + e.what(), 0);
  }
  const std::uint64_t expected = ck.params.parameter_count();
  const auto count = detail::get_le<std::uint64_t>(in, "parameter count");
  if (declared != expected || count != expected)
    throw ConfigMismatchError("checkpoint holds " + std::to_string(count) + " parameters, architecture needs " +
                              std::to_string(expected));
  for (auto t : ck.params.tensors())
    for (float& v : t) v = std::bit_cast<float>(detail::get_le<std::uint32_t>(in, "parameters"));
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("trailing bytes after checkpoint parameters", 0);
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_checkpoint(out, ck);
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return read_checkpoint(in);
}

/// Throws ConfigMismatchError unless the checkpoint was built with `net`.
inline void require_architecture(const Checkpoint& ck, const RelationNetConfig& net) {
  if (!(ck.params.config == net))
    throw ConfigMismatchError("checkpoint architecture " + to_json(ck.params.config).dump() +
                              " does not match configured " + to_json(net).dump());
}

}  // namespace fewshot
