#include "streetlabel/manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "json.hpp"
#include "streetlabel/error.hpp"
#include "streetlabel/rng.hpp"

namespace streetlabel::dataset {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string fixed6(double v) {
  const double q = quantize6(v);
  return fmt::format("{:.6f}", q);
}

std::string json_quote(std::string_view s) { return json(std::string(s)).dump(); }

std::string header_line(const ManifestHeader& h) {
  ordered_json j;
  j["record"] = "header";
  j["format"] = kManifestFormat;
  j["version"] = h.version;
  j["seed"] = h.seed;
  j["final"] = h.final;
  ordered_json t = ordered_json::object();
  for (const auto& f : threshold_fields()) {
    if (f.integer != nullptr) {
      t[std::string(f.name)] = h.thresholds.*f.integer;
    } else {
      t[std::string(f.name)] = h.thresholds.*f.real;
    }
  }
  j["thresholds"] = t;
  auto sources = h.sources;
  std::sort(sources.begin(), sources.end(),
            [](const SourceDigest& a, const SourceDigest& b) { return a.kind < b.kind; });
  ordered_json arr = ordered_json::array();
  for (const auto& s : sources) {
    ordered_json o;
    o["kind"] = s.kind;
    o["path"] = s.path;
    o["sha256"] = s.sha256;
    arr.push_back(o);
  }
  j["sources"] = arr;
  return j.dump();
}

std::string label_text(const AttributeLabel& l) {
  switch (label_kind(l.task)) {
    case LabelKind::kBinary: return l.flag() ? "true" : "false";
    case LabelKind::kReal: return fixed6(l.real());
    case LabelKind::kInteger: return std::to_string(l.count());
  }
  return "null";
}

std::string sample_line(const LabeledSample& s) {
  std::string out;
  out.reserve(256);
  out += "{\"sample_id\":" + json_quote(s.sample_id);
  out += ",\"pano_id\":" + json_quote(s.crop.pano_id);
  out += ",\"task\":" + json_quote(to_string(s.label.task));
  out += ",\"crop\":{\"heading_deg\":" + fixed6(s.crop.heading_deg);
  out += ",\"pitch_deg\":" + fixed6(s.crop.pitch_deg);
  out += ",\"fov_deg\":" + fixed6(s.crop.fov_deg);
  out += ",\"width\":" + std::to_string(s.crop.width_px);
  out += ",\"height\":" + std::to_string(s.crop.height_px) + "}";
  out += ",\"label\":" + label_text(s.label);
  out += ",\"way_id\":" + std::to_string(s.way_id);
  out += ",\"split\":" + json_quote(to_string(s.split));
  out += ",\"provenance\":" + json_quote(s.provenance);
  out += "}";
  return out;
}

ManifestHeader parse_header(const json& j) {
  if (j.value("record", "") != "header") throw DataError("first line is not a manifest header");
  if (j.at("format").get<std::string>() != kManifestFormat) throw DataError("not a streetlabel manifest");
  ManifestHeader h;
  h.version = j.at("version").get<int>();
  if (h.version != kManifestVersion) {
    throw DataError("unsupported manifest version " + std::to_string(h.version));
  }
  h.seed = j.at("seed").get<std::uint64_t>();
  h.final = j.at("final").get<bool>();
  const json& t = j.at("thresholds");
  for (const auto& f : threshold_fields()) {
    if (auto it = t.find(std::string(f.name)); it != t.end()) set(h.thresholds, f, it->get<double>());
  }
  for (const auto& s : j.at("sources")) {
    h.sources.push_back({s.at("kind").get<std::string>(), s.at("path").get<std::string>(),
                         s.at("sha256").get<std::string>()});
  }
  return h;
}

LabeledSample parse_sample(const json& j) {
  LabeledSample s;
  s.sample_id = j.at("sample_id").get<std::string>();
  s.crop.pano_id = j.at("pano_id").get<std::string>();
  const Task task = parse_task(j.at("task").get<std::string>());
  const json& c = j.at("crop");
  s.crop.heading_deg = c.at("heading_deg").get<double>();
  s.crop.pitch_deg = c.at("pitch_deg").get<double>();
  s.crop.fov_deg = c.at("fov_deg").get<double>();
  s.crop.width_px = c.at("width").get<int>();
  s.crop.height_px = c.at("height").get<int>();
  s.crop.validate();
  const json& l = j.at("label");
  switch (label_kind(task)) {
    case LabelKind::kBinary:
      s.label = AttributeLabel::binary(task, l.get<bool>());
      break;
    case LabelKind::kReal:
      if (!l.is_number()) throw DataError("label of " + std::string(to_string(task)) + " must be a number");
      s.label = AttributeLabel::real(task, l.get<double>());
      break;
    case LabelKind::kInteger:
      if (!l.is_number_integer()) throw DataError("label of num_lanes must be an integer");
      s.label = AttributeLabel::integer(task, l.get<std::int64_t>());
      break;
  }
  s.way_id = j.at("way_id").get<std::int64_t>();
  s.split = parse_split(j.at("split").get<std::string>());
  s.provenance = j.value("provenance", "");
  return s;
}

}  // namespace

std::string to_jsonl(const Manifest& m) {
  std::vector<const LabeledSample*> order;
  order.reserve(m.samples.size());
  for (const auto& s : m.samples) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const LabeledSample* a, const LabeledSample* b) { return a->sample_id < b->sample_id; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i]->sample_id == order[i - 1]->sample_id) {
      throw DataError("duplicate sample_id " + order[i]->sample_id + "; manifest not written");
    }
  }
  std::string out = header_line(m.header) + "\n";
  for (const LabeledSample* s : order) {
    if (m.header.final && s->split == Split::kUnassigned) {
      throw DataError("sample " + s->sample_id + " has no split in a final manifest");
    }
    out += sample_line(*s);
    out += '\n';
  }
  return out;
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  const std::string text = to_jsonl(m);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

Manifest parse_manifest(std::string_view text, const std::string& source) {
  Manifest m;
  bool have_header = false;
  std::set<std::string, std::less<>> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      const json j = json::parse(line);
      if (!have_header) {
        m.header = parse_header(j);
        have_header = true;
        continue;
      }
      LabeledSample s = parse_sample(j);
      if (!ids.insert(s.sample_id).second) throw DataError("duplicate sample_id " + s.sample_id);
      m.samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw RecordError(source, line_no, e.what());
    } catch (const RecordError&) {
      throw;
    } catch (const Error& e) {
      throw RecordError(source, line_no, e.what());
    }
  }
  if (!have_header) throw DataError(source + ": manifest has no header");
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("missing manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.string());
}

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw DataError("sha256 failed");
  }
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("missing file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

SourceDigest digest_source(std::string kind, const std::filesystem::path& path) {
  return {std::move(kind), path.filename().string(), sha256_file(path)};
}

bool check_source(const Manifest& m, std::string_view kind, const std::filesystem::path& path,
                  Diagnostics& diag) {
  const auto it = std::find_if(m.header.sources.begin(), m.header.sources.end(),
                               [&](const SourceDigest& s) { return s.kind == kind; });
  if (it == m.header.sources.end()) {
    diag.warn("digest_missing", "manifest records no digest for " + std::string(kind));
    return false;
  }
  if (it->sha256 != sha256_file(path)) {
    diag.warn("digest_mismatch", std::string(kind) + " file " + path.string() +
                                     " differs from the one the manifest was built from");
    return false;
  }
  return true;
}

SplitResult split_by_longitude(std::vector<LabeledSample> samples,
                               const std::vector<pano::PanoMeta>& panos, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train_fraction must be in (0, 1)");
  }
  std::unordered_map<std::string, double> lon_of;
  for (const auto& p : panos) lon_of.emplace(p.pano_id, p.loc.lon_deg);

  std::set<std::string> used;
  for (const auto& s : samples) used.insert(s.pano_id());
  std::vector<std::pair<double, std::string>> order;
  for (const auto& id : used) {
    auto it = lon_of.find(id);
    if (it == lon_of.end()) throw DataError("no metadata for pano " + id);
    order.emplace_back(it->second, id);
  }
  std::sort(order.begin(), order.end());
  std::set<double> distinct;
  for (const auto& [lon, id] : order) distinct.insert(lon);
  if (distinct.size() < 2) throw DataError("need at least two distinct pano longitudes to split");

  const std::size_t n = order.size();
  // The epsilon keeps 0.8 * 10 from rounding up to 9.
  auto k = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
  k = std::clamp<std::size_t>(k, 1, n);

  SplitResult r;
  r.boundary_lon = order[k - 1].first;
  std::unordered_map<std::string, Split> split_of;
  for (const auto& [lon, id] : order) {
    const bool train = lon <= r.boundary_lon;
    split_of[id] = train ? Split::kTrain : Split::kTest;
    ++(train ? r.train_panos : r.test_panos);
  }
  for (auto& s : samples) s.split = split_of.at(s.pano_id());
  r.samples = std::move(samples);
  return r;
}

BalanceResult balance(std::vector<LabeledSample> samples, std::uint64_t seed, Split scope) {
  BalanceResult r;
  if (samples.empty()) {
    r.samples = std::move(samples);
    return r;
  }
  const Task task = samples.front().task();
  if (!is_categorical(task)) {
    throw DataError("cannot balance numeric task " + std::string(to_string(task)));
  }
  std::vector<const LabeledSample*> pos;
  std::vector<const LabeledSample*> neg;
  for (const auto& s : samples) {
    if (s.task() != task) throw DataError("balance() expects samples of a single task");
    if (s.split != scope) continue;
    (s.label.flag() ? pos : neg).push_back(&s);
  }
  if (pos.empty() || neg.empty()) {
    throw DataError(fmt::format("cannot balance {} in {}: a class has no instances", to_string(task),
                                to_string(scope)));
  }
  auto by_id = [](const LabeledSample* a, const LabeledSample* b) { return a->sample_id < b->sample_id; };
  std::sort(pos.begin(), pos.end(), by_id);
  std::sort(neg.begin(), neg.end(), by_id);

  const std::size_t target = std::max(pos.size(), neg.size());
  std::vector<LabeledSample> dups;
  for (const auto* bucket : {&pos, &neg}) {
    if (bucket->size() == target) continue;
    const bool cls = bucket == &pos;
    Rng rng = Rng::stream(seed, fmt::format("{}/{}", to_string(task), to_string(scope)),
                          cls ? "positive" : "negative");
    std::unordered_map<std::string, std::size_t> copies;
    for (std::size_t i = bucket->size(); i < target; ++i) {
      const LabeledSample& src = *(*bucket)[rng.below(bucket->size())];
      LabeledSample d = src;
      d.sample_id = duplicate_sample_id(src.sample_id, ++copies[src.sample_id]);
      dups.push_back(std::move(d));
    }
  }
  r.duplicates_added = dups.size();
  r.samples = std::move(samples);
  for (auto& d : dups) r.samples.push_back(std::move(d));
  return r;
}

BalanceResult balance_manifest(std::vector<LabeledSample> samples, std::uint64_t seed,
                               Diagnostics& diag) {
  BalanceResult total;
  for (Task task : kAllTasks) {
    if (!is_categorical(task)) continue;
    std::vector<LabeledSample> mine;
    std::vector<LabeledSample> rest;
    for (auto& s : samples) (s.task() == task ? mine : rest).push_back(std::move(s));
    for (Split scope : {Split::kTrain, Split::kTest}) {
      const bool any = std::any_of(mine.begin(), mine.end(),
                                   [&](const LabeledSample& s) { return s.split == scope; });
      if (!any) continue;
      try {
        BalanceResult br = balance(mine, seed, scope);
        total.duplicates_added += br.duplicates_added;
        mine = std::move(br.samples);
      } catch (const DataError& e) {
        diag.warn("balance_skipped", e.what());
      }
    }
    samples = std::move(rest);
    for (auto& s : mine) samples.push_back(std::move(s));
  }
  total.samples = std::move(samples);
  return total;
}

Stats stats(const Manifest& m) {
  Stats st;
  for (Task t : kAllTasks) st.tasks[t] = {};
  std::map<Task, double> sums;
  for (const auto& s : m.samples) {
    TaskStats& ts = st.tasks[s.task()];
    ++st.total;
    ++ts.count;
    switch (s.split) {
      case Split::kTrain: ++ts.train; break;
      case Split::kTest: ++ts.test; break;
      case Split::kUnassigned: ++ts.unassigned; break;
    }
    if (is_duplicate_id(s.sample_id)) ++ts.duplicates;
    const double v = s.label.as_double();
    if (is_categorical(s.task())) {
      ++(s.label.flag() ? ts.positives : ts.negatives);
    }
    if (ts.count == 1) {
      ts.min = ts.max = v;
    } else {
      ts.min = std::min(ts.min, v);
      ts.max = std::max(ts.max, v);
    }
    sums[s.task()] += v;
  }
  for (auto& [t, ts] : st.tasks) {
    if (ts.count > 0) ts.mean = sums[t] / static_cast<double>(ts.count);
  }
  return st;
}

std::string stats_table(const Stats& s) {
  std::string out = fmt::format("{:<22} {:>8} {:>8} {:>8} {:>6} {:>8} {:>8} {:>10} {:>10} {:>10}\n",
                                "task", "count", "train", "test", "dups", "pos", "neg", "min", "mean",
                                "max");
  for (const auto& [t, ts] : s.tasks) {
    const bool cat = is_categorical(t);
    out += fmt::format("{:<22} {:>8} {:>8} {:>8} {:>6} {:>8} {:>8} {:>10} {:>10} {:>10}\n",
                       to_string(t), ts.count, ts.train, ts.test, ts.duplicates,
                       cat ? std::to_string(ts.positives) : "-", cat ? std::to_string(ts.negatives) : "-",
                       cat ? "-" : fmt::format("{:.3f}", ts.min), cat ? "-" : fmt::format("{:.3f}", ts.mean),
                       cat ? "-" : fmt::format("{:.3f}", ts.max));
  }
  out += fmt::format("{:<22} {:>8}\n", "total", s.total);
  return out;
}

std::string stats_json(const Stats& s) {
  ordered_json j;
  j["total"] = s.total;
  ordered_json tasks = ordered_json::object();
  for (const auto& [t, ts] : s.tasks) {
    ordered_json o;
    o["count"] = ts.count;
    o["train"] = ts.train;
    o["test"] = ts.test;
    o["unassigned"] = ts.unassigned;
    o["duplicates"] = ts.duplicates;
    if (is_categorical(t)) {
      o["positives"] = ts.positives;
      o["negatives"] = ts.negatives;
    } else {
      o["min"] = quantize6(ts.min);
      o["mean"] = quantize6(ts.mean);
      o["max"] = quantize6(ts.max);
    }
    tasks[std::string(to_string(t))] = o;
  }
  j["tasks"] = tasks;
  return j.dump() + "\n";
}

}  // namespace streetlabel::dataset
