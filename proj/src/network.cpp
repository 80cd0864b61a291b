#include <atsal/network.hpp>

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace atsal {

const char* to_string(LayerKind kind) noexcept {
  switch (kind) {
  case LayerKind::conv:
    return "conv";
  case LayerKind::maxpool:
    return "maxpool";
  case LayerKind::upsample:
    return "upsample";
  case LayerKind::relu:
    return "relu";
  case LayerKind::sigmoid:
    return "sigmoid";
  }
  return "?";
}

std::size_t LayerSpec::parameter_count() const noexcept {
  if (kind != LayerKind::conv)
    return 0;
  return out_channels * in_channels * kernel.rows * kernel.cols + out_channels;
}

std::size_t NetworkSpec::input_channels() const {
  if (layers.empty())
    throw ArgumentError("network '" + name + "' has no layers");
  return layers.front().in_channels;
}

std::size_t NetworkSpec::output_channels() const {
  if (layers.empty())
    throw ArgumentError("network '" + name + "' has no layers");
  return layers.back().out_channels;
}

void NetworkSpec::validate() const {
  if (layers.empty())
    throw ArgumentError("network '" + name + "' has no layers");
  std::size_t channels = layers.front().in_channels;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const std::string where = "network '" + name + "' layer " + std::to_string(i);
    if (l.kernel.rows == 0 || l.kernel.cols == 0 || l.stride.rows == 0 || l.stride.cols == 0)
      throw ArgumentError(where + ": kernel and stride extents must be >= 1");
    if (l.in_channels != channels)
      throw ArgumentError(where + ": in_channels " + std::to_string(l.in_channels) +
                          " does not chain from " + std::to_string(channels));
    if (l.kind == LayerKind::conv) {
      if (l.in_channels == 0 || l.out_channels == 0)
        throw ArgumentError(where + ": conv channels must be >= 1");
      if (l.name.empty())
        throw ArgumentError(where + ": conv layer needs a name");
    } else if (l.out_channels != l.in_channels) {
      throw ArgumentError(where + ": non-conv layer must carry channels through");
    }
    if (l.kind == LayerKind::upsample && l.upsample_factor == 0)
      throw ArgumentError(where + ": upsample factor must be >= 1");
    if (l.temporal && l.kind != LayerKind::conv)
      throw ArgumentError(where + ": only conv layers can be temporal");
    channels = l.out_channels;
  }
}

NetworkBuilder::NetworkBuilder(std::string name, std::size_t input_channels)
    : channels_(input_channels) {
  spec_.name = std::move(name);
}

NetworkBuilder& NetworkBuilder::conv(std::string layer_name, std::size_t out_channels,
                                     std::size_t kernel, std::size_t padding, std::size_t stride) {
  LayerSpec l;
  l.kind = LayerKind::conv;
  l.kernel = Pair{kernel};
  l.stride = Pair{stride};
  l.padding = Pair{padding};
  l.in_channels = channels_;
  l.out_channels = out_channels;
  l.name = std::move(layer_name);
  spec_.layers.push_back(std::move(l));
  channels_ = out_channels;
  return *this;
}

NetworkBuilder& NetworkBuilder::maxpool(std::size_t kernel, std::size_t stride) {
  LayerSpec l;
  l.kind = LayerKind::maxpool;
  l.kernel = Pair{kernel};
  l.stride = Pair{stride};
  l.in_channels = l.out_channels = channels_;
  spec_.layers.push_back(l);
  return *this;
}

NetworkBuilder& NetworkBuilder::upsample(std::size_t factor) {
  LayerSpec l;
  l.kind = LayerKind::upsample;
  l.upsample_factor = factor;
  l.in_channels = l.out_channels = channels_;
  spec_.layers.push_back(l);
  return *this;
}

NetworkBuilder& NetworkBuilder::relu() {
  LayerSpec l;
  l.kind = LayerKind::relu;
  l.in_channels = l.out_channels = channels_;
  spec_.layers.push_back(l);
  return *this;
}

NetworkBuilder& NetworkBuilder::sigmoid() {
  LayerSpec l;
  l.kind = LayerKind::sigmoid;
  l.in_channels = l.out_channels = channels_;
  spec_.layers.push_back(l);
  return *this;
}

NetworkBuilder& NetworkBuilder::temporal() {
  for (auto it = spec_.layers.rbegin(); it != spec_.layers.rend(); ++it)
    if (it->kind == LayerKind::conv) {
      it->temporal = true;
      return *this;
    }
  throw ArgumentError("temporal(): no conv layer to wrap");
}

NetworkSpec NetworkBuilder::build() const {
  spec_.validate();
  return spec_;
}

std::size_t count_parameters(const NetworkSpec& spec) {
  std::size_t total = 0;
  for (const LayerSpec& l : spec.layers)
    total += l.parameter_count();
  return total;
}

NetworkSpec concat(const NetworkSpec& a, const NetworkSpec& b) {
  NetworkSpec out;
  out.name = a.name + "+" + b.name;
  out.layers = a.layers;
  out.layers.insert(out.layers.end(), b.layers.begin(), b.layers.end());
  out.validate();
  return out;
}

NetworkSpec scale_width(const NetworkSpec& spec, std::size_t divisor, bool keep_input,
                        bool keep_output) {
  if (divisor == 0)
    throw ArgumentError("scale_width: divisor must be >= 1");
  auto scaled = [&](std::size_t c) {
    if (c % divisor != 0)
      throw ArgumentError("scale_width: " + std::to_string(c) + " channels not divisible by " +
                          std::to_string(divisor));
    return c / divisor;
  };
  std::size_t first_conv = spec.layers.size();
  std::size_t last_conv = spec.layers.size();
  for (std::size_t i = 0; i < spec.layers.size(); ++i)
    if (spec.layers[i].kind == LayerKind::conv) {
      if (first_conv == spec.layers.size())
        first_conv = i;
      last_conv = i;
    }

  NetworkSpec out = spec;
  std::size_t channels = (keep_input || first_conv == spec.layers.size())
                             ? spec.input_channels()
                             : scaled(spec.input_channels());
  for (std::size_t i = 0; i < out.layers.size(); ++i) {
    LayerSpec& l = out.layers[i];
    l.in_channels = channels;
    if (l.kind == LayerKind::conv)
      l.out_channels = (keep_output && i == last_conv) ? spec.layers[i].out_channels
                                                       : scaled(spec.layers[i].out_channels);
    else
      l.out_channels = channels;
    channels = l.out_channels;
  }
  out.validate();
  return out;
}

std::vector<ReceptiveFieldRow> receptive_field(const NetworkSpec& spec) {
  std::vector<ReceptiveFieldRow> rows;
  rows.reserve(spec.layers.size());
  double rf_r = 1.0, rf_c = 1.0, jump_r = 1.0, jump_c = 1.0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    if (l.kind == LayerKind::conv || l.kind == LayerKind::maxpool) {
      rf_r += static_cast<double>(l.kernel.rows - 1) * jump_r;
      rf_c += static_cast<double>(l.kernel.cols - 1) * jump_c;
      jump_r *= static_cast<double>(l.stride.rows);
      jump_c *= static_cast<double>(l.stride.cols);
    } else if (l.kind == LayerKind::upsample) {
      jump_r /= static_cast<double>(l.upsample_factor);
      jump_c /= static_cast<double>(l.upsample_factor);
    }
    ReceptiveFieldRow row;
    row.index = i;
    row.kind = l.kind;
    row.name = l.name;
    row.rf_rows = static_cast<std::size_t>(std::llround(rf_r));
    row.rf_cols = static_cast<std::size_t>(std::llround(rf_c));
    row.jump_rows = jump_r;
    row.jump_cols = jump_c;
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string pair_token(Pair p) {
  if (p.rows == p.cols)
    return std::to_string(p.rows);
  return std::to_string(p.rows) + "x" + std::to_string(p.cols);
}

std::size_t parse_count(const std::string& token, std::size_t line) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(token, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != token.size() || token.empty() || token[0] == '-')
    throw FormatError("spec line " + std::to_string(line) + ": bad number '" + token + "'");
  return static_cast<std::size_t>(v);
}

Pair parse_pair(const std::string& token, std::size_t line) {
  const auto x = token.find('x');
  if (x == std::string::npos)
    return Pair{parse_count(token, line)};
  return Pair{parse_count(token.substr(0, x), line), parse_count(token.substr(x + 1), line)};
}

} // namespace

void write_spec(std::ostream& out, const NetworkSpec& spec) {
  out << "# network " << spec.name << '\n';
  for (const LayerSpec& l : spec.layers) {
    out << to_string(l.kind) << (l.temporal ? "+ema" : "") << ' ' << pair_token(l.kernel) << ' '
        << pair_token(l.stride) << ' ' << pair_token(l.padding) << ' ' << l.in_channels << ' '
        << l.out_channels << ' ' << l.upsample_factor;
    if (!l.name.empty())
      out << ' ' << l.name;
    out << '\n';
  }
}

NetworkSpec read_spec(std::istream& in) {
  NetworkSpec spec;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind))
      continue;
    if (kind[0] == '#') {
      std::string word;
      if (ls >> word && word == "network")
        ls >> spec.name;
      continue;
    }
    std::vector<std::string> fields;
    for (std::string f; ls >> f;)
      fields.push_back(f);
    if (fields.size() < 6 || fields.size() > 7)
      throw FormatError("spec line " + std::to_string(line_no) +
                        ": expected 'kind k s p in out factor [name]'");
    LayerSpec l;
    if (kind == "conv" || kind == "conv+ema") {
      l.kind = LayerKind::conv;
      l.temporal = kind == "conv+ema";
    } else if (kind == "maxpool") {
      l.kind = LayerKind::maxpool;
    } else if (kind == "upsample") {
      l.kind = LayerKind::upsample;
    } else if (kind == "relu") {
      l.kind = LayerKind::relu;
    } else if (kind == "sigmoid") {
      l.kind = LayerKind::sigmoid;
    } else {
      throw FormatError("spec line " + std::to_string(line_no) + ": unknown layer kind '" + kind +
                        "'");
    }
    l.kernel = parse_pair(fields[0], line_no);
    l.stride = parse_pair(fields[1], line_no);
    l.padding = parse_pair(fields[2], line_no);
    l.in_channels = parse_count(fields[3], line_no);
    l.out_channels = parse_count(fields[4], line_no);
    l.upsample_factor = parse_count(fields[5], line_no);
    if (fields.size() == 7)
      l.name = fields[6];
    spec.layers.push_back(std::move(l));
  }
  try {
    spec.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(e.what());
  }
  return spec;
}

std::string to_text(const NetworkSpec& spec) {
  std::ostringstream out;
  write_spec(out, spec);
  return out.str();
}

NetworkSpec spec_from_text(const std::string& text) {
  std::istringstream in(text);
  return read_spec(in);
}

std::string weight_key(const std::string& prefix, const NetworkSpec& spec, const LayerSpec& layer) {
  return prefix + spec.name + "/" + layer.name + "/weight";
}

std::string bias_key(const std::string& prefix, const NetworkSpec& spec, const LayerSpec& layer) {
  return prefix + spec.name + "/" + layer.name + "/bias";
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void init_he_uniform(const NetworkSpec& spec, const std::string& prefix, std::mt19937_64& rng,
                     WeightStore& out) {
  for (const LayerSpec& l : spec.layers) {
    if (l.kind != LayerKind::conv)
      continue;
    const std::size_t fan_in = l.in_channels * l.kernel.rows * l.kernel.cols;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Tensor w(Shape{l.out_channels, l.in_channels, l.kernel.rows, l.kernel.cols});
    for (float& v : w.data())
      v = static_cast<float>((2.0 * uniform01(rng) - 1.0) * bound);
    out.insert_or_assign(weight_key(prefix, spec, l), std::move(w));
    out.insert_or_assign(bias_key(prefix, spec, l), Tensor(Shape{l.out_channels, 1, 1, 1}));
  }
}

} // namespace atsal
