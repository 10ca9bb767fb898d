#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>

#include <json.hpp>

#include "fewshot/error.hpp"
#include "fewshot/gesture.hpp"

namespace fewshot {

// GSJL: one gesture sample per line,
//   {"class": "<label>", "pair": ["<a>","<b>"], "sample_id": "<id>", "valid": [72 bools], "frames": [[63 numbers] x 72]}
// Writers emit exactly this key order; readers accept any order. Blank lines
// and lines starting with '#' are skipped.

namespace detail {

/// DOM builder that reads floating-point literals straight into float, so a
/// shortest-representation float survives the round trip bit-for-bit.
class FloatExactSax {
 public:
  using json = nlohmann::json;
  explicit FloatExactSax(json& root) : dom_(root, true) {}

  bool null() { return dom_.null(); }
  bool boolean(bool v) { return dom_.boolean(v); }
  bool number_integer(json::number_integer_t v) { return dom_.number_integer(v); }
  bool number_unsigned(json::number_unsigned_t v) { return dom_.number_unsigned(v); }
  bool number_float(json::number_float_t v, const json::string_t& raw) {
    float f = 0;
    const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), f);
    if (ec == std::errc() && ptr == raw.data() + raw.size()) v = static_cast<double>(f);
    return dom_.number_float(v, raw);
  }
  bool string(json::string_t& v) { return dom_.string(v); }
  bool binary(json::binary_t& v) { return dom_.binary(v); }
  bool start_object(std::size_t n) { return dom_.start_object(n); }
  bool key(json::string_t& k) { return dom_.key(k); }
  bool end_object() { return dom_.end_object(); }
  bool start_array(std::size_t n) { return dom_.start_array(n); }
  bool end_array() { return dom_.end_array(); }
  template <typename Exception>
  bool parse_error(std::size_t pos, const std::string& tok, const Exception& ex) {
    return dom_.parse_error(pos, tok, ex);
  }

 private:
  nlohmann::detail::json_sax_dom_parser<json> dom_;
};

inline void append_float(std::string& out, float v) {
  if (v == 0.0f) {
    out += '0';
    return;
  }
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline GestureSequence sequence_from_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw SchemaError("record is not a JSON object", line);
  for (const auto& [k, _] : j.items())
    if (k != "class" && k != "pair" && k != "sample_id" && k != "valid" && k != "frames")
      throw SchemaError("unknown key '" + k + "'", line);
  const auto need = [&](const char* key) -> const nlohmann::json& {
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(std::string("missing key '") + key + "'", line);
    return *it;
  };

  GestureSequence s;
  const auto& cls = need("class");
  if (!cls.is_string()) throw SchemaError("'class' must be a string", line);
  s.class_label = cls.get<std::string>();
  const auto& pair = need("pair");
  if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string())
    throw SchemaError("'pair' must be an array of two strings", line);
  s.original_pair = {pair[0].get<std::string>(), pair[1].get<std::string>()};
  const auto& id = need("sample_id");
  if (!id.is_string()) throw SchemaError("'sample_id' must be a string", line);
  s.sample_id = id.get<std::string>();

  const auto& valid = need("valid");
  if (!valid.is_array() || valid.size() != kSequenceLength)
    throw SchemaError("'valid' must hold exactly " + std::to_string(kSequenceLength) + " booleans", line);
  const auto& frames = need("frames");
  if (!frames.is_array() || frames.size() != kSequenceLength)
    throw SchemaError("'frames' must hold exactly " + std::to_string(kSequenceLength) + " frames, got " +
                          std::to_string(frames.is_array() ? frames.size() : 0),
                      line);
  for (std::size_t t = 0; t < kSequenceLength; ++t) {
    if (!valid[t].is_boolean()) throw SchemaError("'valid' entry " + std::to_string(t) + " is not a boolean", line);
    const auto& f = frames[t];
    if (!f.is_array() || f.size() != kFrameValues)
      throw SchemaError("frame " + std::to_string(t) + " must hold " + std::to_string(kFrameValues) + " numbers",
                        line);
    auto& frame = s.frames[t];
    frame.valid = valid[t].get<bool>();
    for (std::size_t v = 0; v < kFrameValues; ++v) {
      if (!f[v].is_number())
        throw SchemaError("frame " + std::to_string(t) + " value " + std::to_string(v) + " is not a number", line);
      float x = f[v].get<float>();
      if (v % 3 == 2) x = std::clamp(x, -1.0f, 1.0f);
      frame.coords[v] = x;
    }
  }
  validate_sequence(s, line);
  return s;
}

}  // namespace detail

/// Canonical single-line encoding of one sample (no trailing newline).
inline std::string to_gsjl_line(const GestureSequence& s) {
  using nlohmann::json;
  std::string out;
  out.reserve(kSequenceLength * kFrameValues * 8);
  out += "{\"class\": ";
  out += json(s.class_label).dump();
  out += ", \"pair\": [";
  out += json(s.original_pair.first).dump();
  out += ',';
  out += json(s.original_pair.second).dump();
  out += "], \"sample_id\": ";
  out += json(s.sample_id).dump();
  out += ", \"valid\": [";
  for (std::size_t t = 0; t < kSequenceLength; ++t) {
    if (t) out += ',';
    out += s.frames[t].valid ? "true" : "false";
  }
  out += "], \"frames\": [";
  for (std::size_t t = 0; t < kSequenceLength; ++t) {
    if (t) out += ',';
    out += '[';
    for (std::size_t v = 0; v < kFrameValues; ++v) {
      if (v) out += ',';
      detail::append_float(out, s.frames[t].coords[v]);
    }
    out += ']';
  }
  out += "]}";
  return out;
}

inline GestureSequence parse_gsjl_line(const std::string& text, std::size_t line = 0) {
  nlohmann::json j;
  detail::FloatExactSax sax(j);
  try {
    nlohmann::json::sax_parse(text, &sax);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line);
  }
  return detail::sequence_from_json(j, line);
}

inline GestureDataset read_gsjl(std::istream& in) {
  GestureDataset data;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    const auto first = text.find_first_not_of(" \t");
    if (first == std::string::npos || text[first] == '#') continue;
    auto seq = parse_gsjl_line(text, line);
    try {
      data.add(std::move(seq));
    } catch (const SchemaError& e) {
      throw SchemaError(e.what(), line);
    }
  }
  return data;
}

inline GestureDataset load_gsjl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return read_gsjl(in);
}

inline void write_gsjl(std::ostream& out, const GestureDataset& data) {
  for (const auto& s : data.samples()) out << to_gsjl_line(s) << '\n';
}

inline void save_gsjl(const GestureDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_gsjl(out, data);
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace fewshot
