#include "pushframe/stream.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>

#include <fmt/format.h>

#include "pushframe/error.hpp"

namespace pushframe {

namespace {
constexpr std::string_view kStreamMagic = "# pushframe-stream v1";
}

std::string_view to_string(Readout r) { return r == Readout::binary ? "binary" : "differential"; }

Readout parse_readout(std::string_view s) {
  if (s == "binary") return Readout::binary;
  if (s == "differential") return Readout::differential;
  throw ValidationError(fmt::format("unknown readout '{}' (binary|differential)", s));
}

MeasurementStream::MeasurementStream(StreamMeta meta)
    : meta_(std::move(meta)), sums_(meta_.steps * meta_.channels * meta_.order, 0.0) {
  if (meta_.steps != meta_.width + meta_.order - 1) {
    throw InvariantError(fmt::format("stream steps {} != W + n - 1 = {}", meta_.steps, meta_.width + meta_.order - 1));
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError(fmt::format("bad number '{}'", s));
  }
  return v;
}

std::string serialize_stream(const MeasurementStream& s) {
  const auto& m = s.meta();
  std::string out;
  out.reserve(m.steps * m.channels * (m.order * 20 + 16) + 256);
  out += kStreamMagic;
  out += '\n';
  out += fmt::format("# n={},W={},T={},C={},readout={},pattern_digest={},config_digest={}\n", m.order, m.width, m.steps,
                     m.channels, to_string(m.readout), m.pattern_digest, m.config_digest);
  out += "t,channel";
  for (std::size_t i = 0; i < m.order; ++i) out += fmt::format(",s{}", i);
  out += '\n';
  for (std::size_t t = 0; t < m.steps; ++t) {
    for (std::size_t c = 0; c < m.channels; ++c) {
      out += fmt::format("{},{}", t, c);
      for (std::size_t i = 0; i < m.order; ++i) {
        out += ',';
        out += format_double(s.at(t, i, c));
      }
      out += '\n';
    }
  }
  return out;
}

MeasurementStream parse_stream(const std::string& text) {
  std::size_t pos = 0;
  auto line = [&](std::string_view what) {
    if (pos >= text.size()) throw FormatError(fmt::format("stream file truncated: expected {}", what), pos);
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view l(text.data() + pos, eol - pos);
    const std::size_t at = pos;
    pos = eol + 1;
    return std::pair{l, at};
  };

  if (auto [magic, at] = line("magic"); magic != kStreamMagic) throw FormatError("not a stream file (bad magic)", at);
  auto [header, header_at] = line("metadata");
  if (!header.starts_with("# ")) throw FormatError("stream metadata line must start with '# '", header_at);
  header.remove_prefix(2);
  std::map<std::string, std::string, std::less<>> kv;
  while (!header.empty()) {
    const std::size_t comma = std::min(header.find(','), header.size());
    const std::string_view item = header.substr(0, comma);
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos) throw FormatError("stream metadata item without '='", header_at);
    kv.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
    header.remove_prefix(std::min(comma + 1, header.size()));
  }
  auto get = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(fmt::format("stream metadata missing '{}'", key), header_at);
    return it->second;
  };
  auto get_size = [&](const char* key) {
    const std::string v = get(key);
    std::size_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
      throw FormatError(fmt::format("stream metadata '{}' is not an integer", key), header_at);
    }
    return out;
  };

  StreamMeta meta;
  meta.order = get_size("n");
  meta.width = get_size("W");
  meta.steps = get_size("T");
  meta.channels = get_size("C");
  try {
    meta.readout = parse_readout(get("readout"));
  } catch (const ValidationError& e) {
    throw FormatError(e.what(), header_at);
  }
  meta.pattern_digest = get("pattern_digest");
  meta.config_digest = get("config_digest");
  if (meta.order == 0 || meta.channels == 0 || meta.width == 0 || meta.steps != meta.width + meta.order - 1) {
    throw FormatError("stream metadata inconsistent (need T = W + n - 1, non-zero sizes)", header_at);
  }

  line("column header");
  MeasurementStream s(meta);
  for (std::size_t t = 0; t < meta.steps; ++t) {
    for (std::size_t c = 0; c < meta.channels; ++c) {
      auto [row, at] = line("data row");
      std::size_t field = 0;
      std::size_t start = 0;
      while (start <= row.size()) {
        const std::size_t comma = std::min(row.find(',', start), row.size());
        const std::string_view cell = row.substr(start, comma - start);
        if (field == 0 || field == 1) {
          std::size_t v = 0;
          const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
          const std::size_t want = field == 0 ? t : c;
          if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || v != want) {
            throw FormatError(fmt::format("stream row out of order, expected t={} channel={}", t, c), at + start);
          }
        } else if (field - 2 < meta.order) {
          try {
            s.at(t, field - 2, c) = parse_double(cell);
          } catch (const FormatError& e) {
            throw FormatError(e.what(), at + start);
          }
        } else {
          throw FormatError("stream row has too many values", at + start);
        }
        ++field;
        start = comma + 1;
      }
      if (field != meta.order + 2) throw FormatError("stream row has too few values", at);
    }
  }
  if (pos < text.size()) throw FormatError("stream file has trailing data", pos);
  return s;
}

void save_stream(const std::string& path, const MeasurementStream& s) {
  const std::string text = serialize_stream(s);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw FormatError("failed writing " + path);
}

MeasurementStream load_stream(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open stream file " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  try {
    return parse_stream(text);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace pushframe
