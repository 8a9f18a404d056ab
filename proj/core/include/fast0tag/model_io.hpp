#pragma once

#include <cstdint>
#include <iosfwd>

#include "fast0tag/linear_map.hpp"
#include "fast0tag/rank_net.hpp"
#include "fast0tag/tagger.hpp"

namespace f0t {

// Linear model: text header `fast0tag-linear D Dv ridge` followed by the rows
// of A at 17 significant digits, or a binary twin with magic F0TL and
// little-endian fields. Loaders dispatch on the leading bytes.
void save_linear_map(const LinearDirectionMap& map, std::ostream& out, bool binary = false);
LinearDirectionMap load_linear_map(std::istream& in);

// Network model: text header `fast0tag-net Dv H1 H2 D dropout_rate seed`
// followed by W1 rows, b1, W2 rows, b2, W3 rows, b3; binary twin with magic
// F0TN. dropout_rate and seed record how the parameters were trained.
struct MlpModelFile {
  MlpParams params;
  double dropout_rate = 0.0;
  std::uint64_t seed = 0;
};

void save_mlp(const MlpModelFile& model, std::ostream& out, bool binary = false);
MlpModelFile load_mlp(std::istream& in);

// Reads either model kind, dispatching on the header.
AnyModel load_model(std::istream& in);

}  // namespace f0t
