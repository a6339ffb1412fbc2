#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

#include "papercast/common/error.hpp"
#include "papercast/common/rng.hpp"
#include "papercast/common/text.hpp"
#include "papercast/gateway/backends.hpp"
#include "papercast/gateway/schemas.hpp"

namespace papercast::gateway {

namespace {

std::vector<std::string> sentences(const std::string& body) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    cur.push_back(c == '\n' ? ' ' : c);
    bool end = (c == '.' || c == '!' || c == '?') && (i + 1 == body.size() || std::isspace(static_cast<unsigned char>(body[i + 1])));
    if (end) {
      auto s = text::normalize_space(cur);
      if (text::count_words(s) >= 3) out.push_back(s);
      cur.clear();
    }
  }
  auto s = text::normalize_space(cur);
  if (text::count_words(s) >= 3) out.push_back(s);
  return out;
}

std::string truncate_words(const std::string& s, std::size_t max_words) {
  auto words = text::split_words(s);
  if (words.size() > max_words) words.resize(max_words);
  std::string out = text::join(words, " ");
  while (!out.empty() && (out.back() == ',' || out.back() == ';' || out.back() == ':')) out.pop_back();
  if (!out.empty() && out.back() != '.' && out.back() != '!' && out.back() != '?') out += '.';
  return out;
}

std::string lower_first(std::string s) {
  if (s.size() > 1 && std::isupper(static_cast<unsigned char>(s[0])) && !std::isupper(static_cast<unsigned char>(s[1])))
    s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  return s;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& options) {
  return options[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(options.size()) - 1))];
}

// Finds the section whose heading mentions one of the keywords.
std::string section_text(const json& sections, std::initializer_list<const char*> keywords) {
  for (const auto& s : sections) {
    std::string h = text::to_lower(s.value("heading", ""));
    for (const char* k : keywords)
      if (h.find(k) != std::string::npos) return s.value("text", "");
  }
  return {};
}

struct PaperView {
  std::string title;
  std::string abstract_text, intro, method, results, conclusion;
  std::vector<std::string> figure_ids;  // figures and tables in manifest order
  bool has_first_page = false;
};

PaperView read_paper(const json& in) {
  PaperView p;
  p.title = in.value("title", "this paper");
  json sections = in.value("sections", json::array());
  p.abstract_text = section_text(sections, {"abstract", "preamble"});
  p.intro = section_text(sections, {"introduction", "background", "motivation"});
  p.method = section_text(sections, {"method", "approach", "model", "design"});
  p.results = section_text(sections, {"result", "experiment", "evaluation", "finding"});
  p.conclusion = section_text(sections, {"conclusion", "discussion", "summary"});
  std::vector<std::string> all;
  for (const auto& s : sections) all.push_back(s.value("text", ""));
  auto fallback = [&](std::string& field, std::size_t idx) {
    if (field.empty() && !all.empty()) field = all[std::min(idx, all.size() - 1)];
  };
  fallback(p.abstract_text, 0);
  fallback(p.intro, 0);
  fallback(p.method, 1);
  fallback(p.results, 2);
  fallback(p.conclusion, 3);
  for (const auto& a : in.value("assets", json::array())) {
    std::string id = a.value("asset_id", "");
    if (id == "first_page") p.has_first_page = true;
    else if (!id.empty()) p.figure_ids.push_back(id);
  }
  return p;
}

std::string first_sentence(const std::string& body, Rng& rng, bool random_pick = false) {
  auto ss = sentences(body);
  if (ss.empty()) return body;
  if (random_pick && ss.size() > 1) return ss[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(std::min<std::size_t>(ss.size(), 3)) - 1))];
  return ss.front();
}

json narrative(const PaperView& p, Rng& rng) {
  static const std::vector<std::string> hook_openers = {"Stop scrolling:", "Here is a surprise:", "Big claim ahead:",
                                                        "Quick question:"};
  static const std::vector<std::string> cta_lines = {
      "Read the full paper and tell us which result surprised you most.",
      "Grab the paper, try the released code, and share it with a colleague.",
      "Follow for more research in sixty seconds and read the paper today."};
  std::string hook = pick(rng, hook_openers) + " " + lower_first(first_sentence(p.abstract_text, rng));
  std::string context = first_sentence(p.intro, rng, true);
  std::string teaser = first_sentence(p.results.empty() ? p.method : p.results, rng, true);
  std::string cta = pick(rng, cta_lines);
  std::string fallback = "This work on " + p.title + " has a result worth a look.";
  if (text::count_words(context) < 3) context = fallback;
  if (text::count_words(teaser) < 3) teaser = fallback;

  std::vector<std::string> hook_imgs, context_imgs, teaser_imgs;
  if (p.has_first_page) hook_imgs.push_back("first_page");
  for (std::size_t i = 0; i < p.figure_ids.size(); ++i) {
    if (i == 0) context_imgs.push_back(p.figure_ids[i]);
    else if (teaser_imgs.size() < 3) teaser_imgs.push_back(p.figure_ids[i]);
  }
  return json::array({
      {{"kind", "aggressive_hook"}, {"narration", truncate_words(hook, 16)}, {"image_ids", hook_imgs}},
      {{"kind", "brief_context"}, {"narration", truncate_words(context, 22)}, {"image_ids", context_imgs}},
      {{"kind", "intriguing_teaser"}, {"narration", truncate_words(teaser, 22)}, {"image_ids", teaser_imgs}},
      {{"kind", "call_to_action"}, {"narration", truncate_words(cta, 18)}, {"image_ids", json::array()}},
  });
}

std::string describe(const std::string& kind, std::size_t index, const std::vector<std::string>& images, Rng& rng) {
  if (!images.empty()) {
    const std::string& id = images.front();
    if (id == "first_page" && kind == "aggressive_hook" && index == 0)
      return "Start with a dramatic zoom-in on first_page.png";
    static const std::vector<std::string> templates = {
        "Slow pan across {}.png while the narration explains it", "Show {}.png full width and hold",
        "Zoom in on the key region of {}.png", "Fade in {}.png beneath the headline"};
    std::string t = pick(rng, templates);
    return t.replace(t.find("{}"), 2, id);
  }
  static const std::vector<std::string> plain = {"Bold on-screen text carries the narration",
                                                 "Fade in the key phrase over a dark background",
                                                 "Large centered headline with a short subtitle"};
  return pick(rng, plain);
}

json mock_sceneplan(const json& in, Rng& rng) {
  json section = in.value("section", json::object());
  std::string kind = section.value("kind", "aggressive_hook");
  std::vector<std::string> images = section.value("image_ids", std::vector<std::string>{});
  std::size_t words = text::count_words(section.value("narration", ""));
  int max_by_words = static_cast<int>(std::max<std::size_t>(1, words / 5));
  int count = std::clamp(static_cast<int>(std::max<std::size_t>(1, images.size())) + rng.uniform_int(0, 1), 1,
                         std::min(5, max_by_words));
  std::vector<std::vector<std::string>> per(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < images.size(); ++i) per[i % per.size()].push_back(images[i]);
  json subs = json::array();
  for (int i = 0; i < count; ++i) {
    auto ui = static_cast<std::size_t>(i);
    json imgs = json::array();
    for (const auto& id : per[ui]) imgs.push_back({{"asset_id", id}});
    subs.push_back({{"description", describe(kind, ui, per[ui], rng)},
                    {"duration_s", 2.0 + 0.5 * rng.uniform_int(0, 8)},
                    {"images", imgs}});
  }
  return {{"sub_scenes", subs}};
}

json mock_background(const json& in, Rng& rng) {
  std::vector<std::string> images = in.value("sub_scene", json::object()).value("image_ids", std::vector<std::string>{});
  if (images.empty()) return {{"background", "#000000"}};
  return {{"background", pick(rng, images)}};
}

json mock_text(const json& in, Rng& rng) {
  json sub = in.value("sub_scene", json::object());
  double d = sub.value("duration_s", 3.0);
  auto words = text::split_words(in.value("narration_slice", ""));
  json overlays = json::array();
  if (words.empty()) return {{"overlays", overlays}};
  std::vector<std::string> subtitle(words.begin(), words.begin() + static_cast<long>(std::min<std::size_t>(words.size(), 8)));
  overlays.push_back({{"content", text::join(subtitle, " ")},
                      {"font_size_pt", 40 + 4 * rng.uniform_int(0, 3)},
                      {"color", "#FFFFFF"},
                      {"position", {{"x", 0.05}, {"y", 0.80}, {"w", 0.90}, {"h", 0.08}}},
                      {"start_s", 0.0},
                      {"duration_s", d}});
  if (words.size() > 8 && rng.chance(0.6)) {
    std::vector<std::string> sorted = words;
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
    std::string headline;
    for (std::size_t i = 0; i < 2 && i < sorted.size(); ++i) {
      std::string w = sorted[i];
      w.erase(std::remove_if(w.begin(), w.end(), [](char c) { return std::ispunct(static_cast<unsigned char>(c)); }),
              w.end());
      for (auto& c : w) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      headline += (headline.empty() ? "" : " ") + w;
    }
    overlays.push_back({{"content", headline},
                        {"font_size_pt", 64 + 4 * rng.uniform_int(0, 4)},
                        {"color", "#FFD23F"},
                        {"position", {{"x", 0.05}, {"y", 0.05}, {"w", 0.62}, {"h", 0.11}}},
                        {"start_s", std::round(d * 20.0) / 100.0},
                        {"duration_s", std::round(d * 80.0) / 100.0}});
  }
  return {{"overlays", overlays}};
}

json mock_effects(const json& in, Rng&) {
  json sub = in.value("sub_scene", json::object());
  std::string desc = text::to_lower(sub.value("description", ""));
  double d = sub.value("duration_s", 3.0);
  std::vector<std::string> components = in.value("components", std::vector<std::string>{});
  std::vector<std::string> images = in.value("image_ids", std::vector<std::string>{});
  std::string target;
  static const std::regex asset_ref(R"(([a-z0-9_]+)\.(png|jpe?g))");
  std::smatch m;
  if (std::regex_search(desc, m, asset_ref)) target = m[1].str();
  if (target.empty() && !images.empty()) target = images.front();
  json effects = json::array();
  auto has = [&](const char* w) { return desc.find(w) != std::string::npos; };
  if (!target.empty() && (has("zoom-in") || has("zoom in"))) {
    effects.push_back({{"kind", "zoom_in"}, {"target", target}, {"start_s", 0.0}, {"duration_s", d}, {"magnitude", 1.3}});
  } else if (!target.empty() && (has("zoom-out") || has("zoom out"))) {
    effects.push_back({{"kind", "zoom_out"}, {"target", target}, {"start_s", 0.0}, {"duration_s", d}, {"magnitude", 1.3}});
  } else if (!target.empty() && has("pan")) {
    effects.push_back({{"kind", "pan"}, {"target", target}, {"start_s", 0.0}, {"duration_s", d}, {"magnitude", 0.2}});
  } else if (has("fade")) {
    std::string t = target;
    if (t.empty())
      for (const auto& c : components)
        if (c.rfind("text", 0) == 0 || c.find("_t") != std::string::npos) {
          t = c;
          break;
        }
    if (t.empty() && !components.empty()) t = components.front();
    if (!t.empty())
      effects.push_back({{"kind", "fade_in"}, {"target", t}, {"start_s", 0.0}, {"duration_s", std::min(1.0, d)}});
  }
  return {{"effects", effects}};
}

json mock_layout(const json& in, Rng&) {
  std::string markup = in.value("markup", "");
  static const std::regex tag(R"re(<(image|text|avatar)\s+id="([^"]+)")re");
  std::vector<std::string> images, texts, avatars;
  for (auto it = std::sregex_iterator(markup.begin(), markup.end(), tag); it != std::sregex_iterator(); ++it) {
    std::string kind = (*it)[1].str();
    std::string id = (*it)[2].str();
    (kind == "image" ? images : kind == "text" ? texts : avatars).push_back(id);
  }
  auto r = [](double x, double y, double w, double h) { return json{{"x", x}, {"y", y}, {"w", w}, {"h", h}}; };
  json placements = json::object();
  for (const auto& a : avatars) placements[a] = r(0.70, 0.03, 0.27, 0.15);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (i == 0) placements[texts[i]] = r(0.05, 0.80, 0.90, 0.08);
    else if (i == 1) placements[texts[i]] = r(0.05, 0.05, avatars.empty() ? 0.90 : 0.62, 0.11);
    else placements[texts[i]] = r(0.05, 0.80 - 0.09 * static_cast<double>(i - 1), 0.90, 0.08);
  }
  if (!images.empty()) {
    const double top = 0.19, bottom = std::max(0.45, 0.77 - 0.09 * static_cast<double>(std::max<std::size_t>(texts.size(), 2) - 2));
    const double gap = 0.02;
    double h = (bottom - top - gap * static_cast<double>(images.size() - 1)) / static_cast<double>(images.size());
    for (std::size_t i = 0; i < images.size(); ++i)
      placements[images[i]] = r(0.05, top + static_cast<double>(i) * (h + gap), 0.90, h);
  }
  return {{"placements", placements}};
}

json mock_feedback(const json& in, Rng& rng) {
  std::string role = in.value("role", "sceneplan");
  json metric = in.value("metric", json::object());
  std::string name = metric.value("name", "Clarity");
  std::vector<int> range = in.value("score_range", std::vector<int>{1, 5});
  int lo = range.size() == 2 ? range[0] : 1, hi = range.size() == 2 ? range[1] : 5;
  static const std::vector<int> profile = {2, 3, 3, 4, 4, 5};
  int score = std::clamp(pick(rng, profile), lo, hi);
  static const std::map<std::string, std::pair<std::vector<std::string>, std::vector<std::string>>> comments = {
      {"flashtalk",
       {{"The hook could open with a sharper question to build curiosity.",
         "The narrative jumps into details before the context is clear; state the problem first.",
         "The call to action should name a concrete next step for the viewer."},
        {"The hook sparks curiosity and the story flows from context to teaser.",
         "The narration is clear and motivates the result well."}}},
      {"sceneplan",
       {{"Pacing feels too fast in this sub-scene; hold the figure longer.",
         "The figure is too small to read; use a closer zoom so it stays legible.",
         "The visual does not match the narration; show the figure being described."},
        {"The visuals match the narration and the timing feels natural.",
         "Scene transitions are smooth and the figure is easy to follow."}}},
      {"text",
       {{"The on-screen text is too long to read in the time shown; trim the subtitle.",
         "Key numbers from the narration are missing from the on-screen text.",
         "Subtitle timing lags behind the narration; start the text earlier."},
        {"The on-screen text captures the key information and is easy to read.",
         "Text timing aligns with the narration."}}},
  };
  auto it = comments.find(role);
  const auto& pool = it == comments.end() ? comments.at("sceneplan") : it->second;
  std::string comment = score >= 4 ? pick(rng, pool.second) : pick(rng, pool.first);
  return {{"metric", name}, {"score", score}, {"comment", comment}};
}

json mock_summary(const json& in, Rng&) {
  std::string out;
  json means = in.value("means", json::object());
  if (!means.empty()) {
    out = "Mean scores:";
    for (const auto& [metric, mean] : means.items()) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), " %s %.2f;", metric.c_str(), mean.get<double>());
      out += buf;
    }
    out.back() = '.';
  }
  std::set<std::string> seen;
  for (const auto& r : in.value("records", json::array())) {
    std::string c = text::trim(r.value("comment", ""));
    if (c.empty() || !seen.insert(c).second) continue;
    out += (out.empty() ? "" : " ") + c;
  }
  return {{"summary", out}};
}

const std::map<std::string, std::vector<std::string>>& role_keywords() {
  static const std::map<std::string, std::vector<std::string>> k = {
      {"F", {"hook", "narrat", "story", "script", "curiosity", "question", "call to action", "context", "problem",
             "teaser", "motivat"}},
      {"S", {"pacing", "timing", "scene", "visual", "figure", "zoom", "hold", "transition", "legible", "fast",
             "slow", "match"}},
      {"B", {"background"}},
      {"T", {"text", "subtitle", "font", "caption", "read", "key numbers", "trim"}},
      {"E", {"effect", "zoom", "pan", "fade", "motion"}},
      {"L", {"layout", "position", "placement", "overlap", "text", "legible", "read"}},
  };
  return k;
}

json mock_reflection(const json& in, Rng&) {
  std::string prompt = in.value("prompt", "");
  std::string feedback = text::trim(in.value("feedback", ""));
  std::string agent = in.value("agent", "F");
  if (feedback.empty()) return {{"revised_prompt", prompt}};
  const auto& kw = role_keywords().count(agent) ? role_keywords().at(agent) : role_keywords().at("F");
  std::vector<std::string> keep;
  for (const auto& s : sentences(feedback)) {
    if (s.rfind("Mean scores", 0) == 0) continue;
    std::string lower = text::to_lower(s);
    bool relevant = std::any_of(kw.begin(), kw.end(), [&](const std::string& k) { return lower.find(k) != std::string::npos; });
    if (relevant && std::find(keep.begin(), keep.end(), s) == keep.end()) keep.push_back(s);
  }
  if (keep.empty()) return {{"revised_prompt", prompt}};

  const std::string header = "### Revision guidance\n";
  std::string base = prompt;
  if (auto g = base.find(header); g != std::string::npos) {
    auto end = base.find("\n\n", g);
    base.erase(g, end == std::string::npos ? std::string::npos : end + 2 - g);
  }
  std::string guidance = header;
  for (const auto& s : keep) guidance += "- " + s + "\n";
  guidance += "\n";
  auto schema = base.find(kSchemaBlockBegin);
  if (schema == std::string::npos) base += "\n\n" + guidance;
  else base.insert(schema, guidance);
  return {{"revised_prompt", base}};
}

json mock_evaluation(const json& in, Rng& rng) {
  std::vector<int> range = in.value("score_range", std::vector<int>{1, 5});
  int lo = range.size() == 2 ? range[0] : 1, hi = range.size() == 2 ? range[1] : 5;
  static const std::vector<int> profile = {2, 3, 3, 4, 4, 4, 5};
  json scores = json::object(), comments = json::object();
  for (auto id : kEvaluationMetricIds) {
    int s = std::clamp(pick(rng, profile), lo, hi);
    scores[std::string(id)] = s;
    comments[std::string(id)] = s >= 4 ? "Strong." : "Could be improved.";
  }
  return {{"scores", scores}, {"comments", comments}};
}

json mock_baseline(const json& in, Rng& rng) {
  PaperView p = read_paper(in);
  json sections = narrative(p, rng);
  for (auto& s : sections) {
    std::vector<std::string> imgs = s["image_ids"].get<std::vector<std::string>>();
    std::string narration = s["narration"].get<std::string>();
    double total = static_cast<double>(text::count_words(narration)) / 2.5;
    int count = imgs.size() > 1 ? 2 : 1;
    auto words = text::split_words(narration);
    json subs = json::array();
    for (int i = 0; i < count; ++i) {
      json ids = json::array();
      for (std::size_t k = static_cast<std::size_t>(i); k < imgs.size(); k += static_cast<std::size_t>(count)) ids.push_back(imgs[k]);
      std::size_t from = words.size() * static_cast<std::size_t>(i) / static_cast<std::size_t>(count);
      std::size_t to = std::min(words.size(), from + 8);
      std::vector<std::string> chunk(words.begin() + static_cast<long>(from), words.begin() + static_cast<long>(to));
      subs.push_back({{"description", describe(s["kind"].get<std::string>(), static_cast<std::size_t>(i), ids.get<std::vector<std::string>>(), rng)},
                      {"duration_s", total / count},
                      {"image_ids", ids},
                      {"text",
                       {{"content", text::join(chunk, " ")},
                        {"font_size_pt", 44},
                        {"color", "#FFFFFF"},
                        {"position", {{"x", 0.05}, {"y", 0.80}, {"w", 0.90}, {"h", 0.08}}}}}});
    }
    s["sub_scenes"] = subs;
  }
  return {{"sections", sections}};
}

}  // namespace

json MockBackend::respond(AgentId agent, const std::string& schema_id, const std::string& prompt,
                          const std::vector<std::string>& image_ids) const {
  if (!is_known_schema(schema_id)) raise(ErrorCode::UnknownSchema, "mock has no generator for '" + schema_id + "'");
  std::string salt = to_string(agent) + "|" + schema_id + "|" + sha256_hex(prompt) + "|" + text::join(image_ids, ",");
  Rng rng(seed_, salt);
  json in = extract_input(prompt).value_or(json::object());
  if (!in.is_object()) in = json::object();
  if (schema_id == "flashtalk_v1") return {{"sections", narrative(read_paper(in), rng)}};
  if (schema_id == "sceneplan_v1") return mock_sceneplan(in, rng);
  if (schema_id == "background_v1") return mock_background(in, rng);
  if (schema_id == "text_overlays_v1") return mock_text(in, rng);
  if (schema_id == "effects_v1") return mock_effects(in, rng);
  if (schema_id == "layout_v1") return mock_layout(in, rng);
  if (schema_id == "feedback_v1") return mock_feedback(in, rng);
  if (schema_id == "summary_v1") return mock_summary(in, rng);
  if (schema_id == "reflection_v1") return mock_reflection(in, rng);
  if (schema_id == "evaluation_v1") return mock_evaluation(in, rng);
  return mock_baseline(in, rng);
}

std::string MockBackend::complete(const BackendRequest& request) {
  std::vector<std::string> ids;
  for (const auto& img : request.images) ids.push_back(img.asset_id);
  return respond(request.agent, request.schema_id, request.prompt, ids).dump();
}

}  // namespace papercast::gateway
