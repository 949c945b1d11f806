#pragma once

#include <cstdint>
#include <vector>

#include "rnm/config.hpp"
#include "rnm/kg.hpp"
#include "rnm/types.hpp"

namespace rnm {

/// Symmetrically normalized adjacency D^{-1/2}(A+I)D^{-1/2} over the global
/// entity space. Edges are the undirected, deduplicated triple endpoints;
/// the two KGs stay disconnected components.
SparseMatrix build_adjacency(const GraphPair& pair);

/// Parameters of the 2-layer highway GCN plus the relation-space transform.
/// All layers are square (d x d); the gate bias starts at -1 so early layers
/// mostly carry their input.
struct EncoderParams {
  Matrix w1, w2;    // layer weights
  Matrix wt1, wt2;  // highway gate weights
  Vector bt1, bt2;  // highway gate biases
  Matrix w_rel;     // d x 2d relation-to-entity transform

  static EncoderParams init(int dim, std::uint64_t seed);
  int dim() const { return static_cast<int>(w1.rows()); }
};

/// Gradients shaped like EncoderParams, plus the input-feature gradient.
struct EncoderGrads {
  Matrix w1, w2, wt1, wt2;
  Vector bt1, bt2;
  Matrix w_rel;
  Matrix features;
  static EncoderGrads zero(const EncoderParams& p, int n);
};

/// Intermediate activations kept for the backward pass.
struct ForwardTrace {
  Matrix ah0;   // A_hat * H0
  Matrix m1;    // pre-ReLU layer-1 transform
  Matrix t1;    // layer-1 gate
  Matrix h1;    // layer-1 output
  Matrix ah1;   // A_hat * H1
  Matrix m2;
  Matrix t2;    // unused when only the first layer is gated
  Matrix x;     // final embeddings
};

/// Runs the encoder. Throws if any activation is non-finite.
ForwardTrace gcn_forward_trace(const SparseMatrix& adj, const Matrix& features,
                               const EncoderParams& params, const EncoderConfig& cfg);
Matrix gcn_forward(const SparseMatrix& adj, const Matrix& features, const EncoderParams& params,
                   const EncoderConfig& cfg);

/// Backpropagates dL/dX through the encoder. Fills every field of the result
/// (the caller adds its own w_rel contribution from the regularizer).
EncoderGrads gcn_backward(const SparseMatrix& adj, const Matrix& features,
                          const ForwardTrace& trace, const EncoderParams& params,
                          const EncoderConfig& cfg, const Matrix& d_x);

/// Distinct head / tail entity lists per global relation, the averaging sets
/// of the relation composition.
struct RelationIncidence {
  std::vector<std::vector<int>> heads;  // global entity ids, sorted distinct
  std::vector<std::vector<int>> tails;
  static RelationIncidence build(const GraphPair& pair);
};

/// Relation embeddings: concat[mean of distinct-head rows, mean of
/// distinct-tail rows], one (2d)-row per global relation. Throws for a
/// relation with no triples.
Matrix relation_embeddings(const Matrix& x, const RelationIncidence& incidence);

/// Scatters a gradient on the relation-embedding table back onto entity rows
/// through the distinct-set averaging.
void relation_embeddings_backward(const Matrix& d_rel, const RelationIncidence& incidence,
                                  Matrix& d_x);

}  // namespace rnm
