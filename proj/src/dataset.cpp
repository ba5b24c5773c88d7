#include "ecladts/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "ecladts/error.hpp"

namespace ecladts {

std::string to_string(Waveform kind) {
  switch (kind) {
    case Waveform::TriangularPulse: return "triangular-pulse";
    case Waveform::GaussianBumpUp: return "gaussian-bump-up";
    case Waveform::GaussianBumpDown: return "gaussian-bump-down";
    case Waveform::Background: return "background";
  }
  return "background";
}

Waveform waveform_from_string(const std::string& name) {
  if (name == "triangular-pulse") return Waveform::TriangularPulse;
  if (name == "gaussian-bump-up") return Waveform::GaussianBumpUp;
  if (name == "gaussian-bump-down") return Waveform::GaussianBumpDown;
  if (name == "background") return Waveform::Background;
  throw InputError("unknown waveform kind '" + name + "'");
}

std::vector<double> waveform(Waveform kind, std::size_t width, double amplitude) {
  std::vector<double> out(width, 0.0);
  if (width == 0) return out;
  const double span = width > 1 ? static_cast<double>(width - 1) : 1.0;
  const double center = static_cast<double>(width - 1) / 2.0;
  const double sigma = static_cast<double>(width) / 6.0;
  for (std::size_t t = 0; t < width; ++t) {
    const double pos = static_cast<double>(t);
    switch (kind) {
      case Waveform::TriangularPulse:
        out[t] = amplitude * (1.0 - std::abs(2.0 * pos / span - 1.0));
        break;
      case Waveform::GaussianBumpUp:
      case Waveform::GaussianBumpDown: {
        const double z = (pos - center) / sigma;
        const double v = amplitude * std::exp(-0.5 * z * z);
        out[t] = kind == Waveform::GaussianBumpUp ? v : -v;
        break;
      }
      case Waveform::Background:
        break;
    }
  }
  return out;
}

void DatasetSpec::validate() const {
  if (n < 1) throw ValidationError("dataset needs n >= 1");
  if (w < 1 || ch < 1) throw ValidationError("dataset series must be non-empty");
  if (!class_probs.empty()) {
    double total = 0.0;
    for (double p : class_probs) total += p;
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("class probabilities must sum to 1");
  }
  for (const Primitive& p : primitives) {
    if (p.width < 1) throw ValidationError("primitive " + p.id + " needs width >= 1");
    if (p.channel >= ch) throw ValidationError("primitive " + p.id + " channel out of range");
  }
}

void to_json(json& j, const DatasetSpec& spec) {
  json prims = json::array();
  for (const Primitive& p : spec.primitives) {
    prims.push_back({{"id", p.id},
                     {"kind", to_string(p.kind)},
                     {"channel", p.channel},
                     {"width", p.width},
                     {"amplitude", p.amplitude},
                     {"importance", p.important ? "important" : "unimportant"}});
  }
  j = json{{"name", spec.name},
           {"n", spec.n},
           {"w", spec.w},
           {"ch", spec.ch},
           {"num_classes", spec.num_classes},
           {"class_probs", spec.class_probs},
           {"class_names", spec.class_names},
           {"noise_sigma", spec.noise_sigma},
           {"background", spec.background},
           {"primitives", prims},
           {"seed", spec.seed}};
}

void from_json(const json& j, DatasetSpec& spec) {
  spec.name = j.at("name").get<std::string>();
  spec.n = j.at("n").get<std::size_t>();
  spec.w = j.at("w").get<std::size_t>();
  spec.ch = j.at("ch").get<std::size_t>();
  spec.num_classes = j.at("num_classes").get<std::size_t>();
  spec.class_probs = j.value("class_probs", std::vector<double>{});
  spec.class_names = j.value("class_names", std::vector<std::string>{});
  spec.noise_sigma = j.value("noise_sigma", 0.0);
  spec.background = j.value("background", json::object());
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.primitives.clear();
  for (const json& p : j.value("primitives", json::array())) {
    spec.primitives.push_back(Primitive{p.at("id").get<std::string>(),
                                        waveform_from_string(p.at("kind").get<std::string>()),
                                        p.at("channel").get<std::size_t>(),
                                        p.at("width").get<std::size_t>(),
                                        p.value("amplitude", 1.0),
                                        p.value("importance", std::string("important")) ==
                                            "important"});
  }
}

bool Dataset::has_masks() const {
  return !spec.primitives.empty() &&
         std::all_of(samples.begin(), samples.end(),
                     [&](const Sample& s) { return s.masks.size() == spec.primitives.size(); });
}

Tensor Dataset::batch(std::span<const std::size_t> indices) const {
  Tensor out(Shape{indices.size(), spec.ch, spec.w});
  const std::size_t stride = spec.ch * spec.w;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Tensor& x = samples.at(indices[i]).x;
    std::copy_n(x.data(), stride, out.data() + i * stride);
  }
  return out;
}

std::vector<int> Dataset::labels(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(samples.at(i).label);
  return out;
}

std::optional<std::size_t> Dataset::find(std::size_t sample_id) const {
  if (sample_id < samples.size() && samples[sample_id].id == sample_id) return sample_id;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].id == sample_id) return i;
  return std::nullopt;
}

json encode_mask_runs(const Mask& mask, std::size_t w) {
  json runs = json::array();
  const std::size_t ch = w ? mask.size() / w : 0;
  for (std::size_t c = 0; c < ch; ++c) {
    std::size_t t = 0;
    while (t < w) {
      if (!mask[c * w + t]) {
        ++t;
        continue;
      }
      const std::size_t start = t;
      while (t < w && mask[c * w + t]) ++t;
      runs.push_back(json::array({c, start, t - start}));
    }
  }
  return runs;
}

Mask decode_mask_runs(const json& runs, std::size_t ch, std::size_t w) {
  Mask mask(ch * w, 0);
  for (const json& r : runs) {
    const auto c = r.at(0).get<std::size_t>();
    const auto start = r.at(1).get<std::size_t>();
    const auto len = r.at(2).get<std::size_t>();
    if (c >= ch || start + len > w) throw InputError("mask run out of range");
    std::fill_n(mask.begin() + static_cast<long>(c * w + start), len, 1);
  }
  return mask;
}

namespace {

json sample_meta(const Dataset& data) {
  json samples = json::array();
  for (const Sample& s : data.samples) {
    json masks = json::object();
    for (std::size_t p = 0; p < s.masks.size(); ++p) {
      masks[data.spec.primitives.at(p).id] = encode_mask_runs(s.masks[p], data.spec.w);
    }
    samples.push_back({{"id", s.id}, {"label", s.label}, {"masks", masks}});
  }
  return samples;
}

std::vector<double> flat_values(const Dataset& data) {
  std::vector<double> values;
  values.reserve(data.samples.size() * data.spec.ch * data.spec.w);
  for (const Sample& s : data.samples) {
    values.insert(values.end(), s.x.values().begin(), s.x.values().end());
  }
  return values;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  const bool comma = line.find(',') != std::string::npos;
  if (comma) {
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
  } else {
    std::istringstream ss(line);
    std::string field;
    while (ss >> field) fields.push_back(field);
  }
  return fields;
}

void z_normalize_series(Tensor& x, std::size_t ch, std::size_t w) {
  for (std::size_t c = 0; c < ch; ++c) {
    double* row = x.data() + c * w;
    double mean = 0.0;
    for (std::size_t t = 0; t < w; ++t) mean += row[t];
    mean /= static_cast<double>(w);
    double var = 0.0;
    for (std::size_t t = 0; t < w; ++t) var += (row[t] - mean) * (row[t] - mean);
    const double sd = std::sqrt(var / static_cast<double>(w));
    for (std::size_t t = 0; t < w; ++t) row[t] = sd > 0.0 ? (row[t] - mean) / sd : 0.0;
  }
}

}  // namespace

std::string Dataset::fingerprint() const {
  json meta;
  meta["spec"] = spec;
  meta["samples"] = sample_meta(*this);
  std::vector<std::uint8_t> bytes;
  const std::string text = meta.dump();
  bytes.assign(text.begin(), text.end());
  append_f64_le(bytes, flat_values(*this));
  return sha256_hex(bytes);
}

void save_dataset(const std::filesystem::path& dir, const Dataset& data, StorageFormat format,
                  const json& provenance) {
  std::filesystem::create_directories(dir);
  json meta;
  meta["format"] = "ecladts-dataset/1";
  if (!provenance.is_null()) meta["provenance"] = provenance;
  meta["spec"] = data.spec;
  meta["samples"] = sample_meta(data);
  if (format == StorageFormat::Binary) {
    const auto values = flat_values(data);
    meta["storage"] = {{"kind", "binary"},
                       {"file", "data.bin"},
                       {"dtype", "f64le"},
                       {"layout", "[sample][channel][timestep]"},
                       {"count", values.size()}};
    std::vector<std::uint8_t> bytes;
    append_f64_le(bytes, values);
    write_bytes(dir / "data.bin", bytes);
  } else {
    meta["storage"] = {{"kind", "csv"}, {"dir", "samples"}, {"layout", "rows=timesteps,cols=channels"}};
    for (const Sample& s : data.samples) {
      std::string text;
      for (std::size_t t = 0; t < data.spec.w; ++t) {
        for (std::size_t c = 0; c < data.spec.ch; ++c) {
          if (c) text += ',';
          text += format_double(s.x[c * data.spec.w + t]);
        }
        text += '\n';
      }
      char name[32];
      std::snprintf(name, sizeof name, "%06zu.csv", s.id);
      write_text(dir / "samples" / name, text);
    }
  }
  write_json(dir / "meta.json", meta);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path meta_path = dir / "meta.json";
  if (!std::filesystem::exists(meta_path)) {
    throw InputError("dataset directory " + dir.string() + " has no meta.json");
  }
  const json meta = read_json(meta_path);
  Dataset data;
  try {
    data.spec = meta.at("spec").get<DatasetSpec>();
    const json& storage = meta.at("storage");
    const std::size_t ch = data.spec.ch, w = data.spec.w;
    const json& entries = meta.at("samples");
    std::vector<double> values;
    const std::string kind = storage.at("kind").get<std::string>();
    if (kind == "binary") {
      values = decode_f64_le(read_bytes(dir / storage.at("file").get<std::string>()));
      if (values.size() != entries.size() * ch * w) {
        throw InputError("data.bin holds " + std::to_string(values.size()) +
                         " values, expected " + std::to_string(entries.size() * ch * w));
      }
    } else if (kind != "csv") {
      throw InputError("unknown dataset storage kind '" + kind + "'");
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const json& e = entries[i];
      Sample s;
      s.id = e.at("id").get<std::size_t>();
      s.label = e.at("label").get<int>();
      std::vector<double> x(ch * w);
      if (kind == "binary") {
        std::copy_n(values.begin() + static_cast<long>(i * ch * w), ch * w, x.begin());
      } else {
        char name[32];
        std::snprintf(name, sizeof name, "%06zu.csv", s.id);
        std::istringstream in(read_text(dir / storage.value("dir", std::string("samples")) / name));
        std::string line;
        std::size_t t = 0;
        while (std::getline(in, line)) {
          if (line.empty()) continue;
          const auto fields = split_fields(line);
          if (fields.size() != ch || t >= w) {
            throw InputError(std::string("sample file ") + name + " row " + std::to_string(t) +
                             " has wrong shape");
          }
          for (std::size_t c = 0; c < ch; ++c) {
            if (!parse_double(fields[c], x[c * w + t])) {
              throw InputError(std::string("sample file ") + name + " row " + std::to_string(t) +
                               ": non-numeric cell");
            }
          }
          ++t;
        }
        if (t != w) throw InputError(std::string("sample file ") + name + " has wrong length");
      }
      s.x = Tensor(Shape{ch, w}, std::move(x));
      const json& masks = e.value("masks", json::object());
      for (const Primitive& p : data.spec.primitives) {
        s.masks.push_back(decode_mask_runs(masks.value(p.id, json::array()), ch, w));
      }
      data.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw InputError("dataset meta.json malformed: " + std::string(e.what()));
  }
  return data;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  if (schema.channels < 1) throw ValidationError("csv schema needs channels >= 1");
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<std::string> raw_labels;
  std::vector<std::vector<double>> rows;
  std::size_t row_no = 0;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_fields(line);
    if (schema.label_column >= fields.size()) {
      throw InputError("row " + std::to_string(row_no) + ": missing label column");
    }
    std::string label = fields[schema.label_column];
    label.erase(0, label.find_first_not_of(" \t"));
    label.erase(label.find_last_not_of(" \t\r") + 1);
    fields.erase(fields.begin() + static_cast<long>(schema.label_column));
    if (rows.empty()) {
      expected = fields.size();
      if (expected == 0 || expected % schema.channels != 0) {
        throw InputError("row " + std::to_string(row_no) + ": " + std::to_string(expected) +
                         " values do not split into " + std::to_string(schema.channels) +
                         " channels");
      }
    } else if (fields.size() != expected) {
      throw InputError("row " + std::to_string(row_no) + ": ragged row with " +
                       std::to_string(fields.size()) + " values, expected " +
                       std::to_string(expected));
    }
    std::vector<double> values(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!parse_double(fields[i], values[i])) {
        throw InputError("row " + std::to_string(row_no) + ": non-numeric cell '" + fields[i] +
                         "'");
      }
    }
    if (!schema.labels.empty() &&
        std::find(schema.labels.begin(), schema.labels.end(), label) == schema.labels.end()) {
      throw InputError("row " + std::to_string(row_no) + ": unknown label '" + label + "'");
    }
    raw_labels.push_back(label);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw InputError(path.string() + " contains no series");

  std::vector<std::string> names = schema.labels;
  if (names.empty()) {
    std::set<std::string> distinct(raw_labels.begin(), raw_labels.end());
    names.assign(distinct.begin(), distinct.end());
    const bool numeric = std::all_of(names.begin(), names.end(), [](const std::string& s) {
      double v;
      return parse_double(s, v);
    });
    if (numeric) {
      std::sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
        double x = 0, y = 0;
        parse_double(a, x);
        parse_double(b, y);
        return x < y;
      });
    }
  }
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = static_cast<int>(i);

  Dataset data;
  data.spec.name = path.stem().string();
  data.spec.n = rows.size();
  data.spec.ch = schema.channels;
  data.spec.w = expected / schema.channels;
  data.spec.num_classes = std::max<std::size_t>(names.size(), 2);
  data.spec.class_names = names;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Sample s;
    s.id = i;
    s.label = index.at(raw_labels[i]);
    s.x = Tensor(Shape{data.spec.ch, data.spec.w}, std::move(rows[i]));
    if (schema.z_normalize) z_normalize_series(s.x, data.spec.ch, data.spec.w);
    data.samples.push_back(std::move(s));
  }
  return data;
}

void export_csv(const Dataset& data, const std::filesystem::path& path) {
  std::string text;
  for (const Sample& s : data.samples) {
    if (!data.spec.class_names.empty()) {
      text += data.spec.class_names.at(static_cast<std::size_t>(s.label));
    } else {
      text += std::to_string(s.label);
    }
    for (double v : s.x.values()) {
      text += ',';
      text += format_double(v);
    }
    text += '\n';
  }
  write_text(path, text);
}

}  // namespace ecladts
