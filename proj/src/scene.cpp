// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "compsim/scene.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>

#include "compsim/kernels.hpp"

namespace compsim {

Rgb Appearance::apply(Rgb c) const {
  return {std::clamp(gain.x * c.x + bias.x, 0.0, 1.0), std::clamp(gain.y * c.y + bias.y, 0.0, 1.0),
          std::clamp(gain.z * c.z + bias.z, 0.0, 1.0)};
}

template <typename Real>
BasicSceneNode<Real>::BasicSceneNode(NodeKind k, OrientedBox box, Field f)
    : kind(k), bbox(box), field_(std::make_shared<Field>(std::move(f))) {}

template <typename Real>
typename BasicSceneNode<Real>::Field& BasicSceneNode<Real>::mutable_field() {
  if (field_.use_count() != 1) field_ = std::make_shared<Field>(*field_);
  return *field_;
}

template <typename Real>
void BasicSceneNode<Real>::set_field(Field f) {
  field_ = std::make_shared<Field>(std::move(f));
}

template <typename Real>
BasicScene<Real>::BasicScene(std::string name, Node background) : name_(std::move(name)) {
  if (!background.is_background()) throw std::invalid_argument("scene background node must be of background kind");
  background.id = kBackgroundId;
  nodes_.push_back(std::move(background));
}

template <typename Real>
const typename BasicScene<Real>::Node* BasicScene<Real>::find(int id) const {
  for (const Node& n : nodes_)
    if (n.id == id) return &n;
  return nullptr;
}

template <typename Real>
typename BasicScene<Real>::Node* BasicScene<Real>::find(int id) {
  for (Node& n : nodes_)
    if (n.id == id) return &n;
  return nullptr;
}

template <typename Real>
const typename BasicScene<Real>::Node& BasicScene<Real>::at(int id) const {
  if (const Node* n = find(id)) return *n;
  throw NotFoundError("no node with id " + std::to_string(id) + " in scene '" + name_ + "'");
}

template <typename Real>
typename BasicScene<Real>::Node& BasicScene<Real>::at(int id) {
  if (Node* n = find(id)) return *n;
  throw NotFoundError("no node with id " + std::to_string(id) + " in scene '" + name_ + "'");
}

template <typename Real>
std::optional<std::size_t> BasicScene<Real>::index_of(int id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].id == id) return i;
  return std::nullopt;
}

template <typename Real>
int BasicScene<Real>::add_node(Node node) {
  if (node.is_background()) throw std::invalid_argument("scene already has a background node");
  node.id = next_id_++;
  nodes_.push_back(std::move(node));
  return nodes_.back().id;
}

template <typename Real>
void BasicScene<Real>::remove_node(int id) {
  if (id == kBackgroundId) throw std::invalid_argument("background node cannot be removed");
  auto it = std::find_if(nodes_.begin(), nodes_.end(), [id](const Node& n) { return n.id == id; });
  if (it == nodes_.end()) throw NotFoundError("no node with id " + std::to_string(id) + " in scene '" + name_ + "'");
  nodes_.erase(it);
}

template <typename Real>
void BasicScene<Real>::restore_node(Node node) {
  if (node.is_background() || node.id <= kBackgroundId)
    throw std::invalid_argument("only object nodes can be restored");
  if (find(node.id)) throw std::invalid_argument("node id " + std::to_string(node.id) + " already present");
  auto it = std::find_if(nodes_.begin() + 1, nodes_.end(), [&](const Node& n) { return n.id > node.id; });
  next_id_ = std::max(next_id_, node.id + 1);
  nodes_.insert(it, std::move(node));
}

template <typename Real>
std::optional<int> BasicScene<Real>::selection() const {
  for (const Node& n : nodes_)
    if (n.selected) return n.id;
  return std::nullopt;
}

template <typename Real>
template <typename Other>
BasicScene<Other> BasicScene<Real>::cast() const {
  auto convert = [](const Node& n) {
    BasicSceneNode<Other> out(n.kind, n.bbox, n.field().template cast<Other>());
    out.id = n.id;
    out.name = n.name;
    out.embedding = n.embedding;
    out.appearance = n.appearance;
    out.selected = n.selected;
    return out;
  };
  BasicScene<Other> out(name_, convert(nodes_.front()));
  for (std::size_t i = 1; i < nodes_.size(); ++i) out.restore_node(convert(nodes_[i]));
  out.next_id_ = next_id_;
  return out;
}

template <typename Real>
int semantic_query(const BasicScene<Real>& scene, std::span<const float> query) {
  if (query.size() != kEmbeddingDim) throw std::invalid_argument("query embedding must have 512 entries");
  const double qn = std::sqrt(kernels::dot(query, query));
  std::optional<int> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& node : scene.nodes()) {
    if (node.is_background()) continue;
    const double nn = std::sqrt(kernels::dot(node.embedding, node.embedding));
    const double denom = qn * nn;
    const double score = denom > 0.0 ? kernels::dot(query, node.embedding) / denom : 0.0;
    if (!best || score > best_score || (score == best_score && node.id < *best)) {
      best = node.id;
      best_score = score;
    }
  }
  if (!best) throw NotFoundError("scene '" + scene.name() + "' has no object nodes");
  return *best;
}

Embedding embedding_from_name(const std::string& name) {
  // splitmix64 stream seeded by the name hash, Box-Muller to a Gaussian
  // direction, then normalized.
  std::uint64_t state = 0x9E3779B97F4A7C15ull;
  for (unsigned char c : name) state = (state ^ c) * 0x100000001B3ull;
  auto next = [&state]() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
  };
  Embedding e{};
  double norm2 = 0.0;
  for (std::size_t i = 0; i < kEmbeddingDim; i += 2) {
    const double r = std::sqrt(-2.0 * std::log(next()));
    const double phi = 2.0 * M_PI * next();
    e[i] = static_cast<float>(r * std::cos(phi));
    e[i + 1] = static_cast<float>(r * std::sin(phi));
    norm2 += double(e[i]) * e[i] + double(e[i + 1]) * e[i + 1];
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (float& v : e) v = static_cast<float>(v * inv);
  return e;
}

template class BasicSceneNode<float>;
template class BasicSceneNode<double>;
template class BasicScene<float>;
template class BasicScene<double>;
template BasicScene<double> BasicScene<float>::cast<double>() const;
template BasicScene<float> BasicScene<double>::cast<float>() const;
template BasicScene<float> BasicScene<float>::cast<float>() const;
template int semantic_query(const BasicScene<float>&, std::span<const float>);
template int semantic_query(const BasicScene<double>&, std::span<const float>);

}  // namespace compsim
