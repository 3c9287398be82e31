// SPDX-License-Identifier: Apache-2.0
#include "uas/strategy.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "uas/error.hpp"
#include "uas/metrics.hpp"
#include "uas/optimizer.hpp"
#include "uas/rng.hpp"

namespace uas {
namespace {

void fnv_mix(std::uint64_t& h, const void* data, std::size_t n) noexcept {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

template <class Fn>
void for_each_tensor(const ToyBackbone& backbone, Fn&& fn) {
  for (const auto& layer : backbone.layers()) {
    fn(layer.weights);
    fn(layer.bias);
    if (layer.adapter) {
      fn(layer.adapter->a);
      fn(layer.adapter->b);
    }
  }
}

// y = W x + b (+ B (A x)); `lowrank` receives A x when an adapter is present.
void affine(const AffineLayer& layer, std::span<const double> x,
            std::span<double> y, std::vector<double>* lowrank) {
  const auto& w = layer.weights.values;
  for (std::size_t o = 0; o < layer.out; ++o) {
    double acc = layer.bias.values[o];
    const double* row = w.data() + o * layer.in;
    for (std::size_t i = 0; i < layer.in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
  if (!layer.adapter) return;
  const auto& ad = *layer.adapter;
  std::vector<double> u(ad.rank, 0.0);
  for (std::size_t r = 0; r < ad.rank; ++r) {
    const double* row = ad.a.values.data() + r * layer.in;
    double acc = 0.0;
    for (std::size_t i = 0; i < layer.in; ++i) acc += row[i] * x[i];
    u[r] = acc;
  }
  for (std::size_t o = 0; o < layer.out; ++o) {
    const double* row = ad.b.values.data() + o * ad.rank;
    double acc = 0.0;
    for (std::size_t r = 0; r < ad.rank; ++r) acc += row[r] * u[r];
    y[o] += acc;
  }
  if (lowrank) *lowrank = std::move(u);
}

// Per-sample activations: h[0] = input, h[l+1] = tanh(layer l).
struct Activations {
  std::vector<std::vector<double>> h;
  std::vector<std::vector<double>> lowrank;
};

Activations run_layers(const std::vector<AffineLayer>& layers,
                       std::span<const double> x) {
  Activations act;
  act.h.reserve(layers.size() + 1);
  act.lowrank.resize(layers.size());
  act.h.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::vector<double> y(layers[l].out);
    affine(layers[l], act.h.back(), y, &act.lowrank[l]);
    for (double& v : y) v = std::tanh(v);
    act.h.push_back(std::move(y));
  }
  return act;
}

// Sizes the gradient buffers: every tensor that will receive a gradient
// gets a zeroed vector, everything else stays empty.
ModelGradient zero_gradient(const std::vector<AffineLayer>& layers,
                            const ProbeHead64& head, bool include_frozen) {
  ModelGradient g;
  g.layers.resize(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    auto& lg = g.layers[l];
    if (include_frozen || layer.weights.trainable) {
      lg.weights.assign(layer.weights.values.size(), 0.0);
    }
    if (include_frozen || layer.bias.trainable) lg.bias.assign(layer.out, 0.0);
    if (layer.adapter) {
      lg.a.assign(layer.adapter->a.values.size(), 0.0);
      lg.b.assign(layer.adapter->b.values.size(), 0.0);
    }
  }
  g.head_weights.assign(head.weights.size(), 0.0);
  g.head_bias.assign(head.bias.size(), 0.0);
  return g;
}

// Adds w * d(loss)/d(params) for one sample; returns the unweighted loss.
double backprop_sample(const std::vector<AffineLayer>& layers,
                       const ProbeHead64& head, std::span<const double> x,
                       std::uint32_t label, double w, ModelGradient& g) {
  const auto act = run_layers(layers, x);
  const auto& emb = act.h.back();
  const std::size_t emb_dim = head.dim;

  const auto z = forward(head, std::span<const double>(emb));
  const auto ce = cross_entropy(z, label);

  std::vector<double> dh(emb_dim, 0.0);
  for (std::size_t k = 0; k < head.classes; ++k) {
    const double dz = w * ce.grad_logits[k];
    g.head_bias[k] += dz;
    const double* wrow = head.weights.data() + k * emb_dim;
    double* grow = g.head_weights.data() + k * emb_dim;
    for (std::size_t d = 0; d < emb_dim; ++d) {
      grow[d] += dz * emb[d];
      dh[d] += dz * wrow[d];
    }
  }

  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    auto& lg = g.layers[l];
    const auto& out = act.h[l + 1];
    const auto& in = act.h[l];
    std::vector<double> da(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      da[o] = dh[o] * (1.0 - out[o] * out[o]);
    }
    if (!lg.weights.empty()) {
      for (std::size_t o = 0; o < layer.out; ++o) {
        double* grow = lg.weights.data() + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) grow[i] += da[o] * in[i];
      }
    }
    if (!lg.bias.empty()) {
      for (std::size_t o = 0; o < layer.out; ++o) lg.bias[o] += da[o];
    }
    std::vector<double> du;
    if (layer.adapter) {
      const auto& ad = *layer.adapter;
      const auto& u = act.lowrank[l];
      du.assign(ad.rank, 0.0);
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double* brow = ad.b.values.data() + o * ad.rank;
        double* gbrow = lg.b.data() + o * ad.rank;
        for (std::size_t r = 0; r < ad.rank; ++r) {
          gbrow[r] += da[o] * u[r];
          du[r] += brow[r] * da[o];
        }
      }
      for (std::size_t r = 0; r < ad.rank; ++r) {
        double* garow = lg.a.data() + r * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) garow[i] += du[r] * in[i];
      }
    }
    if (l == 0) break;
    std::vector<double> prev(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* wrow = layer.weights.values.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) prev[i] += wrow[i] * da[o];
    }
    if (layer.adapter) {
      const auto& ad = *layer.adapter;
      for (std::size_t r = 0; r < ad.rank; ++r) {
        const double* arow = ad.a.values.data() + r * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) prev[i] += arow[i] * du[r];
      }
    }
    dh = std::move(prev);
  }
  return ce.value;
}

// Minibatch optimization of every non-empty gradient slot. With `layers`
// empty the inputs are already embeddings.
void train_model(std::vector<AffineLayer>& layers, ProbeHead64& head,
                 const std::vector<std::vector<double>>& inputs,
                 std::span<const std::uint32_t> labels,
                 std::span<const double> weights, const TrainConfig& config) {
  ModelGradient g = zero_gradient(layers, head, false);

  struct Slot {
    std::span<double> params;
    std::vector<double>* grad;
    bool decay;
  };
  std::vector<Slot> slots;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& layer = layers[l];
    auto& lg = g.layers[l];
    if (!lg.weights.empty()) slots.push_back({layer.weights.values, &lg.weights, true});
    if (!lg.bias.empty()) slots.push_back({layer.bias.values, &lg.bias, false});
    if (layer.adapter) {
      slots.push_back({layer.adapter->a.values, &lg.a, true});
      slots.push_back({layer.adapter->b.values, &lg.b, true});
    }
  }
  slots.push_back({head.weights, &g.head_weights, true});
  slots.push_back({head.bias, &g.head_bias, false});

  std::vector<std::size_t> sizes;
  for (const auto& s : slots) sizes.push_back(s.params.size());
  Optimizer optimizer(config, sizes);
  Xoshiro256 shuffle_rng(config.seed ^ 0x5DEECE66DULL);

  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = std::min(config.batch_size, order.size());

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      for (auto& s : slots) std::fill(s.grad->begin(), s.grad->end(), 0.0);
      double weight_sum = 0.0;
      for (std::size_t n = begin; n < end; ++n) {
        const std::size_t idx = order[n];
        weight_sum += weights[idx];
        const double loss =
            backprop_sample(layers, head, inputs[idx], labels[idx], weights[idx], g);
        if (!std::isfinite(loss)) throw NumericError("non-finite loss");
      }
      optimizer.begin_step();
      for (std::size_t s = 0; s < slots.size(); ++s) {
        for (double& v : *slots[s].grad) v /= weight_sum;
        optimizer.apply(s, slots[s].params, *slots[s].grad, slots[s].decay);
      }
    }
  }
}

}  // namespace

ToyBackbone ToyBackbone::make(std::span<const std::size_t> dims,
                              std::uint64_t seed) {
  if (dims.size() < 2) throw DimensionError("backbone needs at least 2 dims");
  ToyBackbone net;
  Xoshiro256 rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] == 0 || dims[l + 1] == 0) {
      throw DimensionError("backbone layer widths must be >= 1");
    }
    AffineLayer layer;
    layer.in = dims[l];
    layer.out = dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    layer.weights.values.resize(layer.in * layer.out);
    for (double& w : layer.weights.values) w = rng.uniform(-bound, bound);
    layer.bias.values.assign(layer.out, 0.0);
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

std::size_t ToyBackbone::input_dim() const noexcept {
  return layers_.empty() ? 0 : layers_.front().in;
}

std::size_t ToyBackbone::output_dim() const noexcept {
  return layers_.empty() ? 0 : layers_.back().out;
}

std::vector<double> ToyBackbone::forward(std::span<const double> x) const {
  if (x.size() != input_dim()) {
    throw DimensionError("backbone input has " + std::to_string(x.size()) +
                         " values, expected " + std::to_string(input_dim()));
  }
  return run_layers(layers_, x).h.back();
}

std::uint64_t ToyBackbone::param_count() const noexcept {
  std::uint64_t n = 0;
  for_each_tensor(*this, [&](const ParamTensor& t) { n += t.values.size(); });
  return n;
}

std::uint64_t ToyBackbone::trainable_count() const noexcept {
  std::uint64_t n = 0;
  for_each_tensor(*this, [&](const ParamTensor& t) {
    if (t.trainable) n += t.values.size();
  });
  return n;
}

std::uint64_t ToyBackbone::frozen_checksum() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for_each_tensor(*this, [&](const ParamTensor& t) {
    if (!t.trainable) fnv_mix(h, t.values.data(), t.values.size() * sizeof(double));
  });
  return h;
}

StrategySpec StrategySpec::parse(std::string_view text) {
  if (text == "probe") return probe();
  if (text == "full") return full();
  if (text.starts_with("lora:")) {
    const auto digits = text.substr(5);
    std::size_t rank = 0;
    if (digits.empty()) throw ConfigError("lora strategy needs a rank: lora:R");
    for (char c : digits) {
      if (c < '0' || c > '9') throw ConfigError("bad LoRA rank '" + std::string(digits) + "'");
      rank = rank * 10 + static_cast<std::size_t>(c - '0');
    }
    if (rank == 0) throw RankError("LoRA rank must be >= 1");
    return lora(rank);
  }
  throw ConfigError("unknown strategy '" + std::string(text) +
                    "' (expected probe, lora:R or full)");
}

std::string StrategySpec::display_name() const {
  switch (kind) {
    case StrategyKind::full_finetune: return "Full Fine-tune";
    case StrategyKind::lora: return "LoRA (r=" + std::to_string(rank) + ")";
    case StrategyKind::linear_probe: return "Linear Probe";
  }
  return "?";
}

std::string StrategySpec::key() const {
  switch (kind) {
    case StrategyKind::full_finetune: return "full";
    case StrategyKind::lora: return "lora:" + std::to_string(rank);
    case StrategyKind::linear_probe: return "probe";
  }
  return "?";
}

TrainablePartition apply_strategy(ToyBackbone& backbone, const ProbeHead64& head,
                                  const StrategySpec& spec, std::uint64_t seed) {
  if (head.dim != backbone.output_dim()) {
    throw DimensionError("head D=" + std::to_string(head.dim) +
                         " does not match backbone output " +
                         std::to_string(backbone.output_dim()));
  }
  if (spec.kind == StrategyKind::lora) {
    if (spec.rank == 0) throw RankError("LoRA rank must be >= 1");
    for (const auto& layer : backbone.layers()) {
      if (spec.rank > std::min(layer.in, layer.out)) {
        throw RankError("LoRA rank " + std::to_string(spec.rank) +
                        " exceeds min(in, out) = " +
                        std::to_string(std::min(layer.in, layer.out)));
      }
    }
  }

  Xoshiro256 rng(seed ^ 0xA5A5A5A5ULL);
  for (auto& layer : backbone.layers()) {
    const bool base_trainable = spec.kind == StrategyKind::full_finetune;
    layer.weights.trainable = base_trainable;
    layer.bias.trainable = base_trainable;
    layer.adapter.reset();
    if (spec.kind == StrategyKind::lora) {
      LoraAdapter ad;
      ad.rank = spec.rank;
      const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
      ad.a.values.resize(spec.rank * layer.in);
      for (double& v : ad.a.values) v = rng.uniform(-bound, bound);
      ad.b.values.assign(layer.out * spec.rank, 0.0);
      layer.adapter = std::move(ad);
    }
  }

  TrainablePartition part;
  for (const auto& layer : backbone.layers()) {
    if (layer.weights.trainable) part.backbone += layer.weights.values.size();
    if (layer.bias.trainable) part.backbone += layer.bias.values.size();
    if (layer.adapter) {
      part.adapters += layer.adapter->a.values.size() + layer.adapter->b.values.size();
    }
  }
  part.head = head.weights.size() + head.bias.size();
  part.total = backbone.param_count() + part.head;
  return part;
}

BudgetReport count_budget(const ToyBackbone& backbone, const ProbeHead64& head,
                          bool head_trainable) {
  const std::uint64_t head_params = head.weights.size() + head.bias.size();
  BudgetReport b;
  b.trainable_params = backbone.trainable_count() + (head_trainable ? head_params : 0);
  b.total_params = backbone.param_count() + head_params;
  return b;
}

BudgetReport count_budget(std::size_t dim, std::size_t classes) {
  BudgetReport b;
  b.trainable_params = param_count(dim, classes);
  b.total_params = b.trainable_params;
  return b;
}

std::vector<FeatureRecord> LabeledDataset::to_records() const {
  std::vector<FeatureRecord> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    std::ostringstream id;
    id << 's' << std::setw(6) << std::setfill('0') << i;
    const auto r = row(i);
    out.push_back(make_record(id.str(), labels[i], splits[i], dim,
                              std::vector<float>(r.begin(), r.end())));
  }
  return out;
}

LabeledDataset make_synthetic_task(std::size_t classes, std::size_t dim,
                                   std::size_t n_per_class, double margin,
                                   std::uint64_t seed) {
  if (classes < 2) throw LabelError("synthetic task needs K >= 2");
  if (dim == 0) throw DimensionError("synthetic task needs D0 >= 1");
  Xoshiro256 rng(seed);

  // Unit directions with pairwise distance sqrt(2); scaled to `margin`.
  std::vector<double> means(classes * dim, 0.0);
  const double scale = margin / std::sqrt(2.0);
  if (classes <= dim) {
    // Random signed axis assignment keeps directions orthogonal.
    std::vector<std::size_t> axes(dim);
    std::iota(axes.begin(), axes.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(axes));
    for (std::size_t c = 0; c < classes; ++c) means[c * dim + axes[c]] = scale;
  } else {
    for (std::size_t c = 0; c < classes; ++c) {
      double norm = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        means[c * dim + d] = rng.normal();
        norm += means[c * dim + d] * means[c * dim + d];
      }
      norm = std::sqrt(norm);
      for (std::size_t d = 0; d < dim; ++d) means[c * dim + d] *= scale / norm;
    }
  }

  LabeledDataset data;
  data.classes = classes;
  data.dim = dim;
  data.features.reserve(classes * n_per_class * dim);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        data.features.push_back(means[c * dim + d] + rng.normal());
      }
      data.labels.push_back(static_cast<std::uint32_t>(c));
      data.splits.push_back(i % 5 == 4 ? Split::test : Split::train);
    }
  }
  return data;
}

LabeledDataset dataset_from_records(std::span<const FeatureRecord> records,
                                    std::size_t classes) {
  if (records.empty()) throw EmptyDatasetError("no records");
  LabeledDataset data;
  data.classes = classes;
  data.dim = records.front().dim();
  for (const auto& r : records) {
    if (r.label_index >= classes) throw LabelError("record label >= K");
    const auto pooled = pool(r.tokens, data.dim);
    data.features.insert(data.features.end(), pooled.begin(), pooled.end());
    data.labels.push_back(r.label_index);
    data.splits.push_back(r.split);
  }
  return data;
}

ModelGradient model_gradient(const ToyBackbone& backbone, const ProbeHead64& head,
                             const LabeledDataset& data,
                             std::span<const std::size_t> indices,
                             bool include_frozen) {
  if (indices.empty()) throw EmptyDatasetError("no samples for the gradient");
  ModelGradient g = zero_gradient(backbone.layers(), head, include_frozen);
  for (auto idx : indices) {
    g.loss += backprop_sample(backbone.layers(), head, data.row(idx),
                              data.labels[idx], 1.0, g);
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  g.loss *= inv;
  const auto scale = [inv](std::vector<double>& v) {
    for (double& x : v) x *= inv;
  };
  for (auto& lg : g.layers) {
    scale(lg.weights);
    scale(lg.bias);
    scale(lg.a);
    scale(lg.b);
  }
  scale(g.head_weights);
  scale(g.head_bias);
  return g;
}

void fit_strategy(ToyBackbone& backbone, ProbeHead64& head,
                  const LabeledDataset& data, std::span<const std::size_t> indices,
                  const TrainConfig& config) {
  config.validate();
  if (indices.empty()) throw EmptyDatasetError("no train samples");
  if (head.dim != backbone.output_dim() || data.dim != backbone.input_dim()) {
    throw DimensionError("dataset, backbone and head dimensions disagree");
  }
  std::vector<std::uint32_t> labels;
  for (auto i : indices) labels.push_back(data.labels[i]);
  const auto weights = sample_weights(labels, data.classes, config.class_weighting);

  const bool frozen = backbone.trainable_count() == 0;
  std::vector<std::vector<double>> inputs;
  inputs.reserve(indices.size());
  for (auto i : indices) {
    const auto x = data.row(i);
    inputs.push_back(frozen ? backbone.forward(x) : std::vector<double>(x.begin(), x.end()));
  }
  std::vector<AffineLayer> no_layers;
  train_model(frozen ? no_layers : backbone.layers(), head, inputs, labels, weights,
              config);
}

std::vector<ComparisonRow> run_comparison(const LabeledDataset& data,
                                          std::span<const StrategySpec> specs,
                                          const TrainConfig& config,
                                          const ComparisonOptions& options) {
  if (specs.empty()) throw ConfigError("run_comparison needs at least one strategy");
  config.validate();

  std::vector<std::size_t> dims = {data.dim};
  dims.insert(dims.end(), options.hidden_dims.begin(), options.hidden_dims.end());

  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (data.splits[i] == Split::train ? train_idx : test_idx).push_back(i);
  }
  if (train_idx.empty()) throw EmptyDatasetError("no train samples");
  if (test_idx.empty()) test_idx = train_idx;

  std::vector<std::uint32_t> train_labels, test_labels;
  for (auto i : train_idx) train_labels.push_back(data.labels[i]);
  for (auto i : test_idx) test_labels.push_back(data.labels[i]);

  const auto score = [&](const ToyBackbone& backbone, const ProbeHead64& head,
                         std::span<const std::size_t> idx,
                         std::span<const std::uint32_t> labels) {
    std::vector<double> logits;
    logits.reserve(idx.size() * data.classes);
    for (auto i : idx) {
      const auto emb = backbone.forward(data.row(i));
      const auto z = forward(head, std::span<const double>(emb));
      logits.insert(logits.end(), z.begin(), z.end());
    }
    return compute_metrics(logits, data.classes, labels);
  };

  std::vector<ComparisonRow> rows;
  for (const auto& spec : specs) {
    const auto started = std::chrono::steady_clock::now();
    auto backbone = ToyBackbone::make(dims, options.backbone_seed);
    auto head = init_head<double>(backbone.output_dim(), data.classes, config.seed);
    const auto part = apply_strategy(backbone, head, spec, config.seed);
    fit_strategy(backbone, head, data, train_idx, config);
    const auto test = score(backbone, head, test_idx, test_labels);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const auto train = score(backbone, head, train_idx, train_labels);

    ComparisonRow row;
    row.spec = spec;
    row.top1 = test.top1;
    row.top5 = test.top5;
    row.top5_k = test.top5_k;
    row.mca = test.mca;
    row.train_top1 = train.top1;
    row.wall_time_seconds = elapsed;
    row.trainable_params = part.trainable();
    row.total_params = part.total;
    rows.push_back(row);
  }
  return rows;
}

std::string comparison_csv(std::span<const ComparisonRow> rows) {
  std::ostringstream os;
  os.precision(10);
  os << "strategy,top1,top5,top5_k,mca,train_top1,wall_time_seconds,"
        "trainable_params,total_params\n";
  for (const auto& r : rows) {
    os << r.spec.key() << ',' << r.top1 << ',' << r.top5 << ',' << r.top5_k << ','
       << r.mca << ',' << r.train_top1 << ',' << r.wall_time_seconds << ','
       << r.trainable_params << ',' << r.total_params << '\n';
  }
  return os.str();
}

std::string comparison_table(std::span<const ComparisonRow> rows) {
  std::ostringstream os;
  os << std::left << std::setw(20) << "Strategy" << std::right << std::setw(8)
     << "Top-1" << std::setw(8) << "Top-5" << std::setw(8) << "MCA"
     << std::setw(16) << "Training Time" << std::setw(14) << "#Params (K)" << '\n';
  os << std::fixed;
  for (const auto& r : rows) {
    std::ostringstream time;
    time << std::fixed << std::setprecision(3) << r.wall_time_seconds << " s";
    os << std::left << std::setw(20) << r.spec.display_name() << std::right
       << std::setprecision(1) << std::setw(8) << 100.0 * r.top1 << std::setw(8)
       << 100.0 * r.top5 << std::setw(8) << 100.0 * r.mca << std::setw(16)
       << time.str() << std::setw(14)
       << static_cast<double>(r.trainable_params) / 1000.0 << '\n';
  }
  return os.str();
}

}  // namespace uas
