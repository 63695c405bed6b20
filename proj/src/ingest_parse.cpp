#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "epf/error.hpp"
#include "epf/ingest.hpp"

namespace epf::ingest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ISO-8601 with explicit offset or 'Z'; seconds optional. Returns UTC
// epoch seconds.
std::optional<std::int64_t> parse_iso_timestamp(std::string_view text) {
  int y, mo, d, h, mi;
  int consumed = 0;
  std::string buf(text);
  if (std::sscanf(buf.c_str(), "%d-%d-%dT%d:%d%n", &y, &mo, &d, &h, &mi,
                  &consumed) != 5)
    return std::nullopt;
  std::size_t pos = std::size_t(consumed);
  int sec = 0;
  if (pos < buf.size() && buf[pos] == ':') {
    int n2 = 0;
    if (std::sscanf(buf.c_str() + pos, ":%d%n", &sec, &n2) != 1)
      return std::nullopt;
    pos += std::size_t(n2);
  }
  auto date = Date::parse(buf.substr(0, 10));
  if (!date || h < 0 || h > 23 || mi < 0 || mi > 59) return std::nullopt;
  std::int64_t utc = date->epoch_seconds() + h * 3600 + mi * 60 + sec;
  if (pos >= buf.size()) return std::nullopt; // offset is required
  char c = buf[pos];
  if (c == 'Z') return utc;
  if (c != '+' && c != '-') return std::nullopt;
  int oh = 0, om = 0;
  std::string off = buf.substr(pos + 1);
  if (std::sscanf(off.c_str(), "%2d:%2d", &oh, &om) < 1 &&
      std::sscanf(off.c_str(), "%2d%2d", &oh, &om) < 1)
    return std::nullopt;
  if (off.size() >= 2) {
    oh = (off[0] - '0') * 10 + (off[1] - '0');
    om = 0;
    if (off.size() >= 5 && off[2] == ':')
      om = (off[3] - '0') * 10 + (off[4] - '0');
    else if (off.size() >= 4 && std::isdigit(unsigned(off[2])))
      om = (off[2] - '0') * 10 + (off[3] - '0');
  } else {
    return std::nullopt;
  }
  std::int64_t offset = std::int64_t(oh) * 3600 + om * 60;
  return c == '+' ? utc - offset : utc + offset;
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, delim)) out.push_back(item);
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

std::string trim(std::string s) {
  auto issp = [](unsigned char c) { return std::isspace(c) || c == '\r'; };
  while (!s.empty() && issp(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && issp(s[i])) ++i;
  return s.substr(i);
}

} // namespace

HourlySeries parse_entsoe_csv(const std::string& path, const std::string& name,
                              const std::string& zone,
                              const std::string& unit) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open '" + path + "'");
  std::string header;
  if (!std::getline(in, header))
    fail(Errc::parse, "'" + path + "': empty file");
  char delim = header.find(';') != std::string::npos ? ';' : ',';

  struct Row {
    std::int64_t t;
    double v;
  };
  std::vector<Row> rows;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line, delim);
    if (fields.size() < 2)
      fail(Errc::parse, "'" + path + "' line " + std::to_string(line_no) +
                            ": expected 2 columns");
    std::string ts = trim(fields[0]);
    // an ISO-8601 interval keeps only its start
    if (auto slash = ts.find('/'); slash != std::string::npos)
      ts = ts.substr(0, slash);
    auto t = parse_iso_timestamp(ts);
    if (!t)
      fail(Errc::parse, "'" + path + "' line " + std::to_string(line_no) +
                            ": unparseable timestamp '" + ts + "'");
    std::string raw = trim(fields[1]);
    double v = kNaN;
    if (!raw.empty() && raw != "N/A" && raw != "n/a") {
      auto res = std::from_chars(raw.data(), raw.data() + raw.size(), v);
      if (res.ec != std::errc() || res.ptr != raw.data() + raw.size())
        fail(Errc::parse, "'" + path + "' line " + std::to_string(line_no) +
                              ": unparseable value '" + raw + "'");
    }
    rows.push_back({*t, v});
  }
  if (rows.size() < 2)
    fail(Errc::parse, "'" + path + "': need at least 2 rows to infer step");

  std::int64_t step_s = 0;
  for (std::size_t i = 1; i < rows.size() && step_s == 0; ++i)
    step_s = rows[i].t - rows[i - 1].t;
  if (step_s != 900 && step_s != 3600)
    fail(Errc::parse, "'" + path + "': inferred step " +
                          std::to_string(step_s) +
                          "s is neither hourly nor 15-minute");
  std::int64_t start = rows.front().t;
  if (start % 3600 != 0)
    fail(Errc::parse, "'" + path + "': first timestamp is not hour-aligned");

  std::int64_t span = rows.back().t - start;
  if (span % step_s != 0)
    fail(Errc::parse, "'" + path + "': inconsistent step between rows");
  std::vector<double> values(std::size_t(span / step_s) + 1, kNaN);
  std::int64_t prev = start - step_s;
  for (const auto& row : rows) {
    if ((row.t - start) % step_s != 0 || row.t <= prev)
      fail(Errc::parse, "'" + path + "': inconsistent step at timestamp " +
                            std::to_string(row.t));
    values[std::size_t((row.t - start) / step_s)] = row.v;
    prev = row.t;
  }
  return make_series(name, zone, unit, start, int(step_s / 60),
                     std::move(values));
}

HourlySeries parse_openmeteo_json(const std::string& path,
                                  const std::string& variable,
                                  const std::string& name,
                                  const std::string& zone) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, "'" + path + "': " + e.what());
  }
  if (!doc.contains("hourly") || !doc["hourly"].is_object())
    fail(Errc::parse, "'" + path + "': missing 'hourly' block");
  const auto& hourly = doc["hourly"];
  if (!hourly.contains(variable)) {
    std::string available;
    for (auto it = hourly.begin(); it != hourly.end(); ++it) {
      if (it.key() == "time") continue;
      if (!available.empty()) available += ", ";
      available += it.key();
    }
    fail(Errc::invalid_argument, "'" + path + "': variable '" + variable +
                                     "' not found; available: " + available);
  }
  if (!hourly.contains("time"))
    fail(Errc::parse, "'" + path + "': missing 'hourly.time'");
  const auto& times = hourly["time"];
  const auto& vals = hourly[variable];
  if (!times.is_array() || !vals.is_array() || times.size() != vals.size())
    fail(Errc::parse, "'" + path + "': 'time' and '" + variable +
                          "' arrays differ in length (" +
                          std::to_string(times.size()) + " vs " +
                          std::to_string(vals.size()) + ")");
  if (times.empty()) fail(Errc::parse, "'" + path + "': empty hourly block");

  std::string unit;
  if (doc.contains("hourly_units") && doc["hourly_units"].contains(variable))
    unit = doc["hourly_units"][variable].get<std::string>();

  // open-meteo times carry no offset; they are taken as UTC
  std::string first = times[0].get<std::string>();
  auto start = parse_iso_timestamp(first + "Z");
  if (!start)
    fail(Errc::parse, "'" + path + "': unparseable time '" + first + "'");
  std::vector<double> values(vals.size(), kNaN);
  for (std::size_t i = 0; i < vals.size(); ++i)
    if (!vals[i].is_null()) values[i] = vals[i].get<double>();
  return make_series(name, zone, unit, *start, 60, std::move(values));
}

std::set<Date> parse_holiday_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open holiday file '" + path + "'");
  std::set<Date> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto d = Date::parse(t);
    if (!d)
      fail(Errc::parse, "'" + path + "' line " + std::to_string(line_no) +
                            ": bad date '" + t + "'");
    out.insert(*d);
  }
  return out;
}

IngestManifest manifest_from_json_file(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, "'" + path + "': " + e.what());
  }
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  IngestManifest m;
  if (!doc.contains("entries") || !doc["entries"].is_array())
    fail(Errc::parse, "'" + path + "': manifest needs an 'entries' array");
  for (const auto& e : doc["entries"]) {
    ManifestEntry entry;
    entry.path = resolve(e.at("path").get<std::string>());
    entry.kind = e.at("kind").get<std::string>();
    entry.name = e.at("name").get<std::string>();
    entry.zone = e.at("zone").get<std::string>();
    entry.unit = e.value("unit", "");
    entry.variable = e.value("variable", entry.name);
    if (entry.kind != "entsoe-csv" && entry.kind != "openmeteo-json")
      fail(Errc::parse, "'" + path + "': unknown entry kind '" + entry.kind +
                            "' (expected entsoe-csv or openmeteo-json)");
    m.entries.push_back(std::move(entry));
  }
  if (doc.contains("holiday_files"))
    for (auto it = doc["holiday_files"].begin();
         it != doc["holiday_files"].end(); ++it)
      m.holiday_files[it.key()] = resolve(it.value().get<std::string>());
  return m;
}

MarketDataset load(const IngestManifest& manifest) {
  if (manifest.entries.empty())
    fail(Errc::invalid_argument, "manifest has no entries");
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<HourlySeries> all;
  for (const auto& entry : manifest.entries) {
    if (!seen.insert({entry.name, entry.zone}).second)
      fail(Errc::invalid_argument, "duplicate manifest entry (" + entry.name +
                                       ", " + entry.zone + ")");
    try {
      HourlySeries s =
          entry.kind == "entsoe-csv"
              ? parse_entsoe_csv(entry.path, entry.name, entry.zone, entry.unit)
              : parse_openmeteo_json(entry.path, entry.variable, entry.name,
                                     entry.zone);
      if (s.step_minutes == 15) s = resample_quarter_to_hour(s);
      all.push_back(fill_gaps(s, 3));
    } catch (const Error& e) {
      fail(e.code(), "entry (" + entry.name + ", " + entry.zone +
                         "): " + e.what());
    }
  }
  MarketDataset dataset = align(all);
  for (const auto& [zone, file] : manifest.holiday_files)
    dataset.holidays[zone] = parse_holiday_file(file);
  return dataset;
}

} // namespace epf::ingest
