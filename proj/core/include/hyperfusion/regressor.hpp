#pragma once

#include <string>
#include <variant>

#include "hyperfusion/gbdt.hpp"
#include "hyperfusion/mlp.hpp"
#include "hyperfusion/ridge.hpp"
#include "hyperfusion/serialize.hpp"

namespace hyperfusion {

enum class MemberKind { kGbdt, kMlp, kRidge };

std::string member_kind_name(MemberKind kind);

using Regressor = std::variant<GbdtModel, MlpModel, RidgeModel>;

// Pure function of (model, X); empty X yields an empty vector. Throws a
// shape error on feature-count mismatch.
Vector predict(const Regressor& model, const Matrix& x);

std::size_t feature_count(const Regressor& model);
MemberKind kind_of(const Regressor& model);

// Binary payloads, 64-bit little-endian, bit-exact round trip.
void serialize_regressor(io::Writer& w, const Regressor& model);
Regressor deserialize_regressor(io::Reader& r);

}  // namespace hyperfusion
