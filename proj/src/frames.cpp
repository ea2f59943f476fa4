#include "tcco/frames.hpp"

#include <json.hpp>

namespace tcco {

using nlohmann::json;

std::string encode_frame(const MetricFrame& m) {
    json j;
    j["type"] = "metric";
    j["v"] = m.v;
    j["conn_id"] = m.conn_id;
    j["subflow_id"] = m.subflow_id;
    j["seq"] = m.seq;
    j["timestamp_us"] = m.timestamp_us;
    j["delivered_bytes"] = m.delivered_bytes;
    j["rtt_us"] = m.rtt_us;
    j["cwnd"] = m.cwnd;
    j["min_rtt_us"] = m.min_rtt_us;
    j["bw_estimate_bps"] = m.bw_estimate_bps;
    j["mode"] = m.mode;
    j["expflag"] = m.expflag;
    j["rtt_sum_us"] = m.rtt_sum_us;
    j["rtt_n"] = m.rtt_n;
    j["stale"] = m.stale;
    if (m.batch > 0) j["batch"] = m.batch;
    return j.dump();
}

std::string encode_frame(const DirectiveFrame& d) {
    json j;
    j["type"] = "directive";
    j["v"] = d.v;
    j["conn_id"] = d.conn_id;
    j["decision_seq"] = d.decision_seq;
    if (d.subflow_id >= 0) j["subflow_id"] = d.subflow_id;
    j["target_cwnd"] = d.target_cwnd;
    return j.dump();
}

std::optional<Frame> decode_frame(const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    const auto type = j.find("type");
    if (type == j.end() || !type->is_string()) return std::nullopt;
    try {
        if (*type == "metric") {
            MetricFrame m;
            m.v = j.value("v", 1);
            m.conn_id = j.at("conn_id").get<int>();
            m.subflow_id = j.at("subflow_id").get<int>();
            m.seq = j.value("seq", std::int64_t{0});
            m.timestamp_us = j.value("timestamp_us", std::int64_t{0});
            m.delivered_bytes = j.value("delivered_bytes", std::int64_t{0});
            m.rtt_us = j.value("rtt_us", std::int64_t{0});
            m.cwnd = j.value("cwnd", 0.0);
            m.min_rtt_us = j.value("min_rtt_us", std::int64_t{0});
            m.bw_estimate_bps = j.value("bw_estimate_bps", std::int64_t{0});
            m.mode = j.value("mode", std::string("normal"));
            m.expflag = j.value("expflag", false);
            m.rtt_sum_us = j.value("rtt_sum_us", std::int64_t{0});
            m.rtt_n = j.value("rtt_n", std::int64_t{0});
            m.stale = j.value("stale", false);
            m.batch = j.value("batch", 0);
            return Frame{std::move(m)};
        }
        if (*type == "directive") {
            DirectiveFrame d;
            d.v = j.value("v", 1);
            d.conn_id = j.at("conn_id").get<int>();
            d.decision_seq = j.at("decision_seq").get<std::int64_t>();
            d.subflow_id = j.value("subflow_id", -1);
            d.target_cwnd = j.at("target_cwnd").get<std::vector<double>>();
            return Frame{std::move(d)};
        }
    } catch (const json::exception&) {
        return std::nullopt;
    }
    return std::nullopt;  // unknown type
}

}  // namespace tcco
