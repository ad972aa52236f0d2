#include "noisyfp/dataset_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "noisyfp/error.hpp"

namespace noisyfp {

using nlohmann::json;

namespace {

json oracle_to_json(const SimilarityOracle& oracle) {
  json j;
  if (const auto* lf = std::get_if<LabelWithFlips>(&oracle.kind())) {
    j["kind"] = "label_with_flips";
    json flips = json::array();
    for (const auto& [a, b] : lf->flips.pairs()) flips.push_back({a, b});
    j["flips"] = std::move(flips);
  } else if (const auto* si = std::get_if<SetIntersection>(&oracle.kind())) {
    j["kind"] = "set_intersection";
    j["threshold"] = si->threshold;
  } else {
    j["kind"] = "tuple_rule";
    j["modulus"] = std::get<TupleRule>(oracle.kind()).modulus;
  }
  return j;
}

SimilarityOracle oracle_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "label_with_flips") {
    std::vector<NodePair> pairs;
    if (j.contains("flips")) {
      for (const auto& f : j.at("flips")) {
        pairs.emplace_back(f.at(0).get<NodeIndex>(), f.at(1).get<NodeIndex>());
      }
    }
    return SimilarityOracle::label_with_flips(FlipSet(std::move(pairs)));
  }
  if (kind == "set_intersection") {
    return SimilarityOracle::set_intersection(j.value("threshold", std::int64_t{1}));
  }
  if (kind == "tuple_rule") {
    return SimilarityOracle::tuple_rule(j.at("modulus").get<std::int64_t>());
  }
  throw ConfigError("unknown oracle kind '" + kind + "'");
}

json payload_to_json(const Item& item) {
  json j;
  if (const auto* s = item.get_if<IntSet>()) {
    j["int_set"] = std::vector<std::int64_t>(s->values().begin(), s->values().end());
  } else if (const auto* t = item.get_if<Triple>()) {
    j["triple"] = {t->a(), t->b(), t->c()};
  } else {
    j["labeled"] = item.get_if<Labeled>()->id;
  }
  return j;
}

Item payload_from_json(const json& j) {
  if (!j.is_object() || j.size() != 1) {
    throw ConfigError("item payload must hold exactly one variant");
  }
  if (j.contains("int_set")) return IntSet(j.at("int_set").get<std::vector<std::int64_t>>());
  if (j.contains("triple")) {
    const auto& t = j.at("triple");
    return Triple(t.at(0).get<std::int64_t>(), t.at(1).get<std::int64_t>(),
                  t.at(2).get<std::int64_t>());
  }
  if (j.contains("labeled")) return Labeled{j.at("labeled").get<std::int64_t>()};
  throw ConfigError("unknown payload variant in " + j.dump());
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& ds) {
  json header;
  header["m"] = ds.size();
  header["oracle"] = oracle_to_json(ds.oracle());
  header["has_ground_truth"] = ds.has_ground_truth();
  out << header.dump() << '\n';
  for (NodeIndex i = 1; i <= ds.size(); ++i) {
    json line;
    line["payload"] = payload_to_json(ds.item(i));
    if (ds.has_ground_truth()) line["label"] = ds.label(i);
    if (ds.has_tags()) {
      const auto& tag = ds.tags()[i - 1];
      line["tag"] = {tag.element, tag.player, tag.slot};
    }
    out << line.dump() << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  std::string text;
  if (!std::getline(in, text)) throw ConfigError("dataset file is empty");
  json header;
  try {
    header = json::parse(text);
    const auto m = header.at("m").get<std::size_t>();
    const bool has_truth = header.at("has_ground_truth").get<bool>();
    auto oracle = oracle_from_json(header.at("oracle"));

    std::vector<Item> items;
    items.reserve(m);
    std::vector<std::int64_t> labels;
    std::vector<ItemTag> tags;
    std::size_t line_no = 1;
    while (items.size() < m && std::getline(in, text)) {
      ++line_no;
      if (text.empty()) continue;
      const auto line = json::parse(text);
      items.push_back(payload_from_json(line.at("payload")));
      if (has_truth) {
        if (!line.contains("label")) {
          throw ConfigError("line " + std::to_string(line_no) + " lacks a label");
        }
        labels.push_back(line.at("label").get<std::int64_t>());
      }
      if (line.contains("tag")) {
        const auto& t = line.at("tag");
        tags.push_back({t.at(0).get<std::int64_t>(), t.at(1).get<std::int64_t>(),
                        t.at(2).get<std::int64_t>()});
      }
    }
    if (items.size() != m) {
      throw ConfigError("header declares m=" + std::to_string(m) + " but file holds " +
                        std::to_string(items.size()) + " items");
    }
    if (!tags.empty() && tags.size() != m) {
      throw ConfigError("item tags must be present on every line or none");
    }
    std::optional<std::vector<std::int64_t>> maybe_labels;
    if (has_truth) maybe_labels = std::move(labels);
    std::optional<std::vector<ItemTag>> maybe_tags;
    if (!tags.empty()) maybe_tags = std::move(tags);
    return Dataset(std::move(items), std::move(oracle), std::move(maybe_labels),
                   std::move(maybe_tags));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed dataset file: ") + e.what());
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_dataset(out, ds);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return read_dataset(in);
}

}  // namespace noisyfp
