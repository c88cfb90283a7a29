#pragma once

// Time-tag records and their two on-disk encodings.
//
// CSV (text):
//   # ttag v1, resolution_ps=1
//   channel,timestamp_ps
//   A,1200
//   B,1733
//
// The column-name line is written by the encoder and optional on input. The
// reader also accepts 0/1 in place of A/B. Blank lines and further `#` lines
// are skipped.
//
// Binary: the 8 bytes "TTAGv1\0\0" followed by packed 9-byte records, one
// u8 channel (0 = A, 1 = B) and one little-endian u64 timestamp in ps.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "hom/errors.hpp"
#include "hom/io.hpp"

namespace hom {

enum class Channel : std::uint8_t { A = 0, B = 1 };

struct TimeTagRecord {
  Channel channel = Channel::A;
  std::uint64_t timestamp = 0;  // ps since acquisition start

  friend bool operator==(const TimeTagRecord&, const TimeTagRecord&) = default;
};

/// Order used for merged streams: time first, then channel so equal
/// timestamps have a fixed order.
inline bool tag_before(const TimeTagRecord& a, const TimeTagRecord& b) {
  return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.channel < b.channel;
}

struct TimeTagStream {
  std::vector<TimeTagRecord> tags;

  std::size_t size() const { return tags.size(); }
  bool empty() const { return tags.empty(); }

  bool is_sorted() const {
    return std::is_sorted(tags.begin(), tags.end(),
                          [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  }

  void sort() { std::sort(tags.begin(), tags.end(), tag_before); }

  std::size_t count(Channel ch) const {
    return static_cast<std::size_t>(
        std::count_if(tags.begin(), tags.end(), [ch](const auto& t) { return t.channel == ch; }));
  }

  friend bool operator==(const TimeTagStream&, const TimeTagStream&) = default;
};

inline constexpr std::string_view ttag_csv_header = "# ttag v1, resolution_ps=1";
inline constexpr std::string_view ttag_csv_columns = "channel,timestamp_ps";
inline constexpr std::array<char, 8> ttag_binary_magic = {'T', 'T', 'A', 'G', 'v', '1', '\0', '\0'};
inline constexpr std::size_t ttag_binary_record = 9;

// -- CSV ---------------------------------------------------------------------

inline void write_ttag_csv(std::ostream& out, const TimeTagStream& stream) {
  out << ttag_csv_header << '\n' << ttag_csv_columns << '\n';
  std::string line;
  char buf[32];
  for (const auto& t : stream.tags) {
    line.clear();
    line += t.channel == Channel::A ? 'A' : 'B';
    line += ',';
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, t.timestamp);
    line.append(buf, end);
    line += '\n';
    out << line;
  }
}

inline TimeTagStream parse_ttag_csv(std::string_view text) {
  TimeTagStream stream;
  std::size_t pos = 0;
  bool seen_header = false;
  while (pos < text.size()) {
    const std::size_t line_start = pos;
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (!seen_header) {
      if (line != ttag_csv_header) throw FormatError("expected header '" + std::string(ttag_csv_header) + "'", line_start);
      seen_header = true;
      continue;
    }
    if (line.empty() || line.front() == '#' || line == ttag_csv_columns) continue;

    const std::size_t comma = line.find(',');
    if (comma == std::string_view::npos) throw FormatError("missing ',' in time-tag row", line_start);
    const std::string_view ch = line.substr(0, comma);
    TimeTagRecord rec;
    if (ch == "A" || ch == "0")
      rec.channel = Channel::A;
    else if (ch == "B" || ch == "1")
      rec.channel = Channel::B;
    else
      throw FormatError("unknown channel '" + std::string(ch) + "'", line_start);

    const std::string_view num = line.substr(comma + 1);
    const char* first = num.data();
    const char* last = num.data() + num.size();
    auto [ptr, ec] = std::from_chars(first, last, rec.timestamp);
    if (ec != std::errc() || ptr != last || num.empty())
      throw FormatError("bad timestamp '" + std::string(num) + "'", line_start + comma + 1 + (ptr - first));
    stream.tags.push_back(rec);
  }
  if (!seen_header) throw FormatError("empty file, expected header", 0);
  return stream;
}

// -- binary ------------------------------------------------------------------

inline void write_ttag_binary(std::ostream& out, const TimeTagStream& stream) {
  out.write(ttag_binary_magic.data(), ttag_binary_magic.size());
  std::vector<char> buf;
  buf.reserve(ttag_binary_record * 4096);
  auto flush = [&] {
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    buf.clear();
  };
  for (const auto& t : stream.tags) {
    buf.push_back(static_cast<char>(t.channel));
    std::uint64_t v = t.timestamp;
    for (int i = 0; i < 8; ++i) {
      buf.push_back(static_cast<char>(v & 0xff));
      v >>= 8;
    }
    if (buf.size() >= ttag_binary_record * 4096) flush();
  }
  flush();
}

inline TimeTagStream parse_ttag_binary(std::string_view bytes) {
  if (bytes.size() < ttag_binary_magic.size() ||
      std::memcmp(bytes.data(), ttag_binary_magic.data(), ttag_binary_magic.size()) != 0)
    throw FormatError("missing TTAGv1 magic", 0);
  const std::size_t body = bytes.size() - ttag_binary_magic.size();
  if (body % ttag_binary_record != 0)
    throw FormatError("truncated record", ttag_binary_magic.size() + body / ttag_binary_record * ttag_binary_record);

  TimeTagStream stream;
  stream.tags.resize(body / ttag_binary_record);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + ttag_binary_magic.size();
  for (std::size_t i = 0; i < stream.tags.size(); ++i, p += ttag_binary_record) {
    if (p[0] > 1) throw FormatError("channel byte must be 0 or 1", ttag_binary_magic.size() + i * ttag_binary_record);
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k) v = (v << 8) | p[1 + k];
    stream.tags[i] = {static_cast<Channel>(p[0]), v};
  }
  return stream;
}

// -- files -------------------------------------------------------------------

enum class TagFormat { csv, binary };

/// Binary if the file starts with the magic, CSV otherwise.
inline TagFormat detect_tag_format(std::string_view bytes) {
  return bytes.size() >= ttag_binary_magic.size() &&
                 std::memcmp(bytes.data(), ttag_binary_magic.data(), ttag_binary_magic.size()) == 0
             ? TagFormat::binary
             : TagFormat::csv;
}

inline TimeTagStream read_time_tags(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  return detect_tag_format(bytes) == TagFormat::binary ? parse_ttag_binary(bytes) : parse_ttag_csv(bytes);
}

inline void write_time_tags(const std::filesystem::path& path, const TimeTagStream& stream, TagFormat format) {
  if (format == TagFormat::binary)
    atomic_write(path, [&](std::ostream& o) { write_ttag_binary(o, stream); }, true);
  else
    atomic_write(path, [&](std::ostream& o) { write_ttag_csv(o, stream); });
}

}  // namespace hom
