#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "ratshare/simnet.hpp"

namespace ratshare {

using ojson = nlohmann::ordered_json;

namespace {

HaltCause parse_cause(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(HaltCause::insufficient_shares); ++i) {
    const auto c = static_cast<HaltCause>(i);
    if (s == to_string(c)) return c;
  }
  throw std::invalid_argument("unknown halt cause '" + s + "'");
}

Stage parse_stage(const std::string& s) {
  if (s == "up") return Stage::up;
  if (s == "down") return Stage::down;
  throw std::invalid_argument("unknown stage '" + s + "'");
}

ojson node_json(std::size_t node) { return node == kNoNode ? ojson(nullptr) : ojson(node); }

std::size_t node_from(const ojson& j) { return j.is_null() ? kNoNode : j.get<std::size_t>(); }

ojson optional_bool(const std::optional<bool>& b) { return b ? ojson(*b) : ojson(nullptr); }

std::optional<bool> optional_bool_from(const ojson& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<bool>();
}

ojson manifest(const Transcript& t) {
  ojson m;
  m["type"] = "manifest";
  m["seed"] = t.seed;
  m["n"] = t.params.n;
  m["q"] = t.params.field.q;
  m["s_size"] = t.params.s_size;
  m["secret"] = t.secret.value;
  m["beta"] = t.params.beta;
  m["definitive_round"] = t.definitive_round;
  m["padding"] = t.padding;
  ojson strategies = ojson::array();
  for (const Strategy& s : t.strategies) strategies.push_back(to_string(s));
  m["strategies"] = std::move(strategies);
  m["deviator"] = t.deviator ? ojson(*t.deviator) : ojson(nullptr);
  m["deviation_round"] = t.deviation_round;
  m["rounds"] = t.rounds;
  m["rounds_started"] = t.rounds_started;
  m["slots"] = t.slots;
  m["total_messages"] = t.total_messages;
  m["round_cap_hit"] = t.round_cap_hit;
  ojson players = ojson::array();
  for (const PlayerRecord& p : t.players) {
    players.push_back({{"output", p.output.value},
                       {"cause", to_string(p.cause)},
                       {"halt_round", p.halt_round},
                       {"halt_stage", to_string(p.halt_stage)},
                       {"learned_round", p.learned_round},
                       {"input_length", p.input_length},
                       {"messages", p.messages},
                       {"bits", p.bits},
                       {"short", p.short_player},
                       {"deviator", p.deviator}});
  }
  m["players"] = std::move(players);
  ojson forgeries = ojson::array();
  for (const ForgeryRecord& f : t.forgeries) {
    forgeries.push_back({{"id", f.message_id},
                         {"round", f.round},
                         {"from", f.sender},
                         {"to", f.receiver},
                         {"accepted", optional_bool(f.accepted)}});
  }
  m["forgeries"] = std::move(forgeries);
  m["messages_recorded"] = t.messages.size();
  return m;
}

ojson message_json(const MessageRecord& r) {
  const Message& m = r.msg;
  ojson payload = ojson::array();
  for (const Element& e : m.payload) payload.push_back(e.value);
  return {{"type", "message"},
          {"id", m.id},
          {"slot", r.slot},
          {"round", m.round},
          {"stage", to_string(m.stage)},
          {"from", m.sender},
          {"to", m.receiver},
          {"from_node", node_json(m.sender_node)},
          {"to_node", node_json(m.receiver_node)},
          {"payload", std::move(payload)},
          {"verified", optional_bool(r.verified)},
          {"forged", m.forged}};
}

}  // namespace

void write_transcript(std::ostream& out, const Transcript& t) {
  out << manifest(t).dump() << '\n';
  for (const MessageRecord& r : t.messages) out << message_json(r).dump() << '\n';
}

std::string transcript_to_jsonl(const Transcript& t) {
  std::ostringstream out;
  write_transcript(out, t);
  return out.str();
}

Transcript read_transcript(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty transcript");
  Transcript t;
  try {
    const ojson m = ojson::parse(line);
    if (m.at("type") != "manifest") throw std::invalid_argument("transcript must start with a manifest");
    t.seed = m.at("seed").get<std::uint64_t>();
    t.params.n = m.at("n").get<std::uint32_t>();
    t.params.field = FieldSpec{m.at("q").get<std::uint64_t>(), t.params.n, m.at("s_size").get<std::uint64_t>()};
    t.params.s_size = m.at("s_size").get<std::uint64_t>();
    t.secret = Element{m.at("secret").get<std::uint64_t>()};
    t.params.secret = t.secret.value;
    t.params.beta = m.at("beta").get<double>();
    t.definitive_round = m.at("definitive_round").get<std::uint32_t>();
    t.padding = m.at("padding").get<std::uint32_t>();
    for (const auto& s : m.at("strategies")) t.strategies.push_back(parse_strategy(s.get<std::string>()));
    if (!m.at("deviator").is_null()) t.deviator = m.at("deviator").get<std::uint32_t>();
    t.deviation_round = m.at("deviation_round").get<std::uint32_t>();
    t.rounds = m.at("rounds").get<std::uint32_t>();
    t.rounds_started = m.at("rounds_started").get<std::uint32_t>();
    t.slots = m.at("slots").get<std::uint64_t>();
    t.total_messages = m.at("total_messages").get<std::uint64_t>();
    t.round_cap_hit = m.at("round_cap_hit").get<bool>();
    for (const auto& p : m.at("players")) {
      PlayerRecord r;
      r.output = Element{p.at("output").get<std::uint64_t>()};
      r.cause = parse_cause(p.at("cause").get<std::string>());
      r.halt_round = p.at("halt_round").get<std::uint32_t>();
      r.halt_stage = parse_stage(p.at("halt_stage").get<std::string>());
      r.learned_round = p.at("learned_round").get<std::uint32_t>();
      r.input_length = p.at("input_length").get<std::uint32_t>();
      r.messages = p.at("messages").get<std::uint64_t>();
      r.bits = p.at("bits").get<std::uint64_t>();
      r.short_player = p.at("short").get<bool>();
      r.deviator = p.at("deviator").get<bool>();
      t.players.push_back(r);
    }
    for (const auto& f : m.at("forgeries")) {
      t.forgeries.push_back({f.at("id").get<std::uint64_t>(), f.at("round").get<std::uint32_t>(),
                             f.at("from").get<std::uint32_t>(), f.at("to").get<std::uint32_t>(),
                             optional_bool_from(f.at("accepted"))});
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const ojson j = ojson::parse(line);
      if (j.at("type") != "message") throw std::invalid_argument("unexpected record type");
      MessageRecord r;
      r.msg.id = j.at("id").get<std::uint64_t>();
      r.slot = j.at("slot").get<std::uint32_t>();
      r.msg.round = j.at("round").get<std::uint32_t>();
      r.msg.stage = parse_stage(j.at("stage").get<std::string>());
      r.msg.sender = j.at("from").get<std::uint32_t>();
      r.msg.receiver = j.at("to").get<std::uint32_t>();
      r.msg.sender_node = node_from(j.at("from_node"));
      r.msg.receiver_node = node_from(j.at("to_node"));
      const auto& payload = j.at("payload");
      if (payload.size() != 4) throw std::invalid_argument("payload must hold four elements");
      for (std::size_t i = 0; i < 4; ++i) r.msg.payload[i] = Element{payload[i].get<std::uint64_t>()};
      r.verified = optional_bool_from(j.at("verified"));
      r.msg.forged = j.at("forged").get<bool>();
      t.messages.push_back(r);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed transcript: ") + e.what());
  }
  return t;
}

}  // namespace ratshare
