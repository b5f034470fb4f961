#include "ward/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "json.hpp"
#include "ward/error.hpp"
#include "ward/parallel.hpp"
#include "ward/rng.hpp"
#include "ward/text.hpp"

namespace ward::corpus {

std::string_view split_name(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "train";
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "validation") return Split::validation;
    if (name == "test") return Split::test;
    raise(ErrorKind::validation, "unknown split: " + std::string(name));
}

const DischargeRecord* Corpus::find(std::string_view hadm_id) const {
    for (const auto& r : records)
        if (r.hadm_id == hadm_id) return &r;
    return nullptr;
}

AuxMapping AuxMapping::defaults() {
    AuxMapping m;
    m.tables["patients"] = {{"subject_id", "subject_id"},
                            {"gender", "gender"},
                            {"anchor_age", "anchor_age"},
                            {"anchor_year", "anchor_year"}};
    m.tables["admissions"] = {{"hadm_id", "hadm_id"},
                              {"subject_id", "subject_id"},
                              {"admittime", "admittime"},
                              {"dischtime", "dischtime"},
                              {"race", "race"}};
    m.tables["diagnoses"] = {{"hadm_id", "hadm_id"}, {"description", "long_title"}};
    m.tables["transfers"] = {{"hadm_id", "hadm_id"}, {"careunit", "careunit"}, {"intime", "intime"}};
    m.tables["radiology"] = {{"hadm_id", "hadm_id"}, {"text", "text"}};
    return m;
}

AuxMapping AuxMapping::from_json(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::schema, std::string("aux mapping is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) raise(ErrorKind::schema, "aux mapping must be a JSON object");
    AuxMapping m = defaults();
    for (const auto& [table, fields] : doc.items()) {
        if (!m.tables.count(table))
            raise(ErrorKind::schema, "aux mapping references unknown table: " + table);
        if (!fields.is_object())
            raise(ErrorKind::schema, "aux mapping for table must be an object: " + table);
        for (const auto& [field, col] : fields.items()) {
            if (!m.tables[table].count(field))
                raise(ErrorKind::schema, "aux mapping unknown field " + field + " in table " + table);
            if (!col.is_string())
                raise(ErrorKind::schema, "aux mapping column must be a string: " + table + "." + field);
            m.tables[table][field] = col.get<std::string>();
        }
    }
    return m;
}

const std::string& AuxMapping::column(const std::string& table, const std::string& field) const {
    auto t = tables.find(table);
    if (t == tables.end()) raise(ErrorKind::config, "unknown aux table: " + table);
    auto f = t->second.find(field);
    if (f == t->second.end()) raise(ErrorKind::config, "unknown aux field: " + table + "." + field);
    return f->second;
}

void AuxTables::finalize() {
    admissions_by_hadm.clear();
    patients_by_subject.clear();
    diagnoses_by_hadm.clear();
    transfers_by_hadm.clear();
    radiology_by_hadm.clear();
    if (admissions) {
        std::size_t col = admissions->require_column(mapping.column("admissions", "hadm_id"));
        for (std::size_t i = 0; i < admissions->rows.size(); ++i)
            admissions_by_hadm.emplace(admissions->rows[i][col], i);
    }
    if (patients) {
        std::size_t col = patients->require_column(mapping.column("patients", "subject_id"));
        for (std::size_t i = 0; i < patients->rows.size(); ++i)
            patients_by_subject.emplace(patients->rows[i][col], i);
    }
    if (diagnoses) {
        std::size_t col = diagnoses->require_column(mapping.column("diagnoses", "hadm_id"));
        for (std::size_t i = 0; i < diagnoses->rows.size(); ++i)
            diagnoses_by_hadm[diagnoses->rows[i][col]].push_back(i);
    }
    if (transfers) {
        std::size_t col = transfers->require_column(mapping.column("transfers", "hadm_id"));
        for (std::size_t i = 0; i < transfers->rows.size(); ++i)
            transfers_by_hadm[transfers->rows[i][col]].push_back(i);
    }
    if (radiology) {
        std::size_t col = radiology->require_column(mapping.column("radiology", "hadm_id"));
        for (std::size_t i = 0; i < radiology->rows.size(); ++i)
            radiology_by_hadm[radiology->rows[i][col]].push_back(i);
    }
}

AuxTables load_aux_tables(const std::map<std::string, std::string>& paths, AuxMapping mapping) {
    AuxTables aux;
    aux.mapping = std::move(mapping);
    for (const auto& [table, path] : paths) {
        if (table == "patients") aux.patients = read_csv_file(path);
        else if (table == "admissions") aux.admissions = read_csv_file(path);
        else if (table == "diagnoses") aux.diagnoses = read_csv_file(path);
        else if (table == "transfers") aux.transfers = read_csv_file(path);
        else if (table == "radiology") aux.radiology = read_csv_file(path);
        else raise(ErrorKind::validation, "unknown aux table: " + table);
    }
    aux.finalize();
    return aux;
}

namespace {

// Howard Hinnant's civil-date algorithms; proleptic Gregorian, no timezones.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yy + (m <= 2));
}

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

int to_int(std::string_view s) {
    int v = 0;
    for (char c : s) v = v * 10 + (c - '0');
    return v;
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view s) {
    s = trim_view(s);
    if (s.size() != 10 && s.size() != 19) return std::nullopt;
    if (s[4] != '-' || s[7] != '-') return std::nullopt;
    if (!all_digits(s.substr(0, 4)) || !all_digits(s.substr(5, 2)) || !all_digits(s.substr(8, 2)))
        return std::nullopt;
    int year = to_int(s.substr(0, 4));
    int month = to_int(s.substr(5, 2));
    int day = to_int(s.substr(8, 2));
    if (month < 1 || month > 12 || day < 1 || day > 31) return std::nullopt;
    int hour = 0, minute = 0, second = 0;
    if (s.size() == 19) {
        if (s[10] != ' ' || s[13] != ':' || s[16] != ':') return std::nullopt;
        if (!all_digits(s.substr(11, 2)) || !all_digits(s.substr(14, 2)) || !all_digits(s.substr(17, 2)))
            return std::nullopt;
        hour = to_int(s.substr(11, 2));
        minute = to_int(s.substr(14, 2));
        second = to_int(s.substr(17, 2));
        if (hour > 23 || minute > 59 || second > 60) return std::nullopt;
    }
    std::int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    return days * 86400 + hour * 3600 + minute * 60 + second;
}

std::string format_timestamp(std::int64_t epoch_s) {
    std::int64_t days = epoch_s / 86400;
    std::int64_t rem = epoch_s % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02lld:%02lld:%02lld", y, m, d,
                  static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                  static_cast<long long>(rem % 60));
    return buf;
}

PatientAdmissionSummary aggregate_patient_context(const std::string& record_id, const AuxTables& aux) {
    if (!aux.admissions) raise(ErrorKind::not_found, "admissions table not loaded");
    auto adm_it = aux.admissions_by_hadm.find(record_id);
    if (adm_it == aux.admissions_by_hadm.end())
        raise(ErrorKind::not_found, "hadm_id not found in admissions: " + record_id);
    const auto& adm_row = aux.admissions->rows[adm_it->second];

    PatientAdmissionSummary out;
    const auto& adm = *aux.admissions;
    std::string race_col = aux.mapping.column("admissions", "race");
    if (auto idx = adm.column_index(race_col)) out.race = adm_row[*idx];

    std::string admit_str = adm_row[adm.require_column(aux.mapping.column("admissions", "admittime"))];
    std::string disch_str = adm_row[adm.require_column(aux.mapping.column("admissions", "dischtime"))];
    auto admit = parse_timestamp(admit_str);
    if (!admit)
        raise(ErrorKind::validation, "unparsable admittime '" + admit_str + "' for hadm_id " + record_id);
    auto disch = parse_timestamp(disch_str);
    if (!disch)
        raise(ErrorKind::validation, "unparsable dischtime '" + disch_str + "' for hadm_id " + record_id);
    if (*disch < *admit)
        raise(ErrorKind::validation, "dischtime precedes admittime for hadm_id " + record_id);
    out.stay_duration_hours = static_cast<double>(*disch - *admit) / 3600.0;

    if (!aux.patients) raise(ErrorKind::not_found, "patients table not loaded");
    std::string subject = adm_row[adm.require_column(aux.mapping.column("admissions", "subject_id"))];
    auto pat_it = aux.patients_by_subject.find(subject);
    if (pat_it == aux.patients_by_subject.end())
        raise(ErrorKind::not_found, "subject_id not found in patients: " + subject);
    const auto& pat = *aux.patients;
    const auto& pat_row = pat.rows[pat_it->second];
    out.gender = pat_row[pat.require_column(aux.mapping.column("patients", "gender"))];
    std::string age_str = pat_row[pat.require_column(aux.mapping.column("patients", "anchor_age"))];
    std::string year_str = pat_row[pat.require_column(aux.mapping.column("patients", "anchor_year"))];
    if (!all_digits(trim(age_str)) || !all_digits(trim(year_str)))
        raise(ErrorKind::validation, "unparsable anchor_age/anchor_year for subject " + subject);
    int admission_year = to_int(std::string_view(admit_str).substr(0, 4));
    int age = to_int(trim(age_str)) + (admission_year - to_int(trim(year_str)));
    out.age_years = std::clamp(age, 0, 150);

    if (aux.diagnoses) {
        const auto& dx = *aux.diagnoses;
        std::size_t desc = dx.require_column(aux.mapping.column("diagnoses", "description"));
        auto it = aux.diagnoses_by_hadm.find(record_id);
        if (it != aux.diagnoses_by_hadm.end())
            for (std::size_t row : it->second) out.diagnoses.push_back(dx.rows[row][desc]);
    }

    if (aux.transfers) {
        const auto& tr = *aux.transfers;
        std::size_t unit = tr.require_column(aux.mapping.column("transfers", "careunit"));
        std::size_t intime = tr.require_column(aux.mapping.column("transfers", "intime"));
        auto it = aux.transfers_by_hadm.find(record_id);
        if (it != aux.transfers_by_hadm.end()) {
            std::vector<std::pair<std::int64_t, std::size_t>> order;
            for (std::size_t row : it->second) {
                auto t = parse_timestamp(tr.rows[row][intime]);
                if (!t)
                    raise(ErrorKind::validation, "unparsable transfer intime '" + tr.rows[row][intime] +
                                                     "' for hadm_id " + record_id);
                order.emplace_back(*t, row);
            }
            std::stable_sort(order.begin(), order.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            for (const auto& [t, row] : order)
                out.transfer_summary.push_back(trim(tr.rows[row][intime]) + " " + tr.rows[row][unit]);
        }
    }
    return out;
}

Corpus load_corpus(const std::string& discharge_path, const AuxTables* aux, LoadStats* stats) {
    CsvTable table = read_csv_file(discharge_path);
    std::size_t id_col = table.require_column("hadm_id");
    std::size_t text_col = table.require_column("text");

    Corpus corpus;
    std::set<std::string> seen;
    std::set<std::string> duplicates;
    LoadStats local;
    for (const auto& row : table.rows) {
        local.rows_total += 1;
        const std::string& id = row[id_col];
        const std::string& text = row[text_col];
        if (trim_view(text).empty()) {
            local.skipped_empty_text += 1;
            continue;
        }
        if (id.empty()) raise(ErrorKind::validation, "empty hadm_id in " + discharge_path);
        if (!seen.insert(id).second) duplicates.insert(id);
        DischargeRecord rec;
        rec.hadm_id = id;
        rec.text = text;
        corpus.records.push_back(std::move(rec));
    }
    if (!duplicates.empty()) {
        std::vector<std::string> ids(duplicates.begin(), duplicates.end());
        raise(ErrorKind::validation, "duplicate hadm_id values: " + join(ids, ", "));
    }
    if (aux) {
        for (auto& rec : corpus.records) {
            try {
                rec.admission = aggregate_patient_context(rec.hadm_id, *aux);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::not_found) throw;
            }
            if (aux->radiology) {
                const auto& rad = *aux->radiology;
                std::size_t tcol = rad.require_column(aux->mapping.column("radiology", "text"));
                auto it = aux->radiology_by_hadm.find(rec.hadm_id);
                if (it != aux->radiology_by_hadm.end())
                    for (std::size_t row : it->second) rec.radiology_notes.push_back(rad.rows[row][tcol]);
            }
        }
    }
    if (stats) *stats = local;
    return corpus;
}

segmenter::SectionedLetter backfill_imaging(segmenter::SectionedLetter sectioned,
                                            const std::vector<std::string>& radiology_notes) {
    if (radiology_notes.empty()) return sectioned;
    std::string joined = join(radiology_notes, "\n");
    for (auto& [name, body] : sectioned.sections) {
        if (name == "imaging_and_studies") {
            if (body.empty()) body = joined;
            return sectioned;
        }
    }
    sectioned.sections.emplace_back("imaging_and_studies", std::move(joined));
    return sectioned;
}

std::string render_patient_admissions(const PatientAdmissionSummary& admission) {
    char stay[32];
    std::snprintf(stay, sizeof(stay), "%.1f", admission.stay_duration_hours);
    std::string out;
    out += "Gender: " + admission.gender + "\n";
    out += "Race: " + admission.race + "\n";
    out += "Age: " + std::to_string(admission.age_years) + "\n";
    out += "Stay duration hours: ";
    out += stay;
    return out;
}

std::optional<std::string> section_text_or_aux(const segmenter::SectionedLetter& sectioned,
                                               const std::optional<PatientAdmissionSummary>& admission,
                                               std::string_view canonical_name) {
    if (const std::string* body = sectioned.find(canonical_name); body && !body->empty()) return *body;
    if (!admission) return std::nullopt;
    if (canonical_name == "patient_admissions") return render_patient_admissions(*admission);
    if (canonical_name == "diagnoses" && !admission->diagnoses.empty())
        return join(admission->diagnoses, "\n");
    if (canonical_name == "transfer_summary" && !admission->transfer_summary.empty())
        return join(admission->transfer_summary, "\n");
    return std::nullopt;
}

void save_corpus_jsonl(const Corpus& corpus, const std::string& path) {
    std::string out;
    for (const auto& rec : corpus.records) {
        nlohmann::json j;
        j["hadm_id"] = rec.hadm_id;
        j["text"] = rec.text;
        if (rec.admission) {
            nlohmann::json a;
            a["gender"] = rec.admission->gender;
            a["race"] = rec.admission->race;
            a["age_years"] = rec.admission->age_years;
            a["diagnoses"] = rec.admission->diagnoses;
            a["transfer_summary"] = rec.admission->transfer_summary;
            a["stay_duration_hours"] = rec.admission->stay_duration_hours;
            j["admission"] = std::move(a);
        } else {
            j["admission"] = nullptr;
        }
        j["radiology_notes"] = rec.radiology_notes;
        out += j.dump();
        out += '\n';
    }
    atomic_write_file(path, out);
}

Corpus load_corpus_jsonl(const std::string& path, Split split) {
    std::string content = read_file(path);
    Corpus corpus;
    corpus.split_label = split;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        std::size_t end = content.find('\n', pos);
        if (end == std::string::npos) end = content.size();
        std::string_view line(content.data() + pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (trim_view(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            raise(ErrorKind::schema,
                  path + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
        }
        if (!j.contains("hadm_id") || !j.contains("text"))
            raise(ErrorKind::schema, path + ":" + std::to_string(line_no) + ": missing hadm_id or text");
        DischargeRecord rec;
        rec.hadm_id = j["hadm_id"].get<std::string>();
        rec.text = j["text"].get<std::string>();
        if (rec.text.empty())
            raise(ErrorKind::validation, path + ":" + std::to_string(line_no) + ": empty text");
        if (!seen.insert(rec.hadm_id).second)
            raise(ErrorKind::validation, "duplicate hadm_id: " + rec.hadm_id);
        if (j.contains("admission") && !j["admission"].is_null()) {
            const auto& a = j["admission"];
            PatientAdmissionSummary s;
            s.gender = a.value("gender", "");
            s.race = a.value("race", "");
            s.age_years = a.value("age_years", 0);
            if (a.contains("diagnoses")) s.diagnoses = a["diagnoses"].get<std::vector<std::string>>();
            if (a.contains("transfer_summary"))
                s.transfer_summary = a["transfer_summary"].get<std::vector<std::string>>();
            s.stay_duration_hours = a.value("stay_duration_hours", 0.0);
            rec.admission = std::move(s);
        }
        if (j.contains("radiology_notes"))
            rec.radiology_notes = j["radiology_notes"].get<std::vector<std::string>>();
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

namespace {

struct Condition {
    const char* complaint;
    std::vector<const char*> diagnoses;
    const char* surgical;
    std::vector<const char*> hpi;
    std::vector<const char*> bhc;
    std::vector<const char*> di;
    std::vector<const char*> meds;
    const char* imaging;
    const char* followup;
    // Bases are hand-spread so corpus-level target lengths come out
    // right-skewed: a few long-stay conditions drag the mean above the median.
    int bhc_base_words;
    int di_base_words;
};

const std::vector<Condition>& conditions() {
    static const std::vector<Condition> pool = {
        {"Cough and fever",
         {"Community acquired pneumonia", "Hypoxemia"},
         "None",
         {"presenting with three days of productive cough and subjective fevers.",
          "reports chills and malaise with decreased oral intake.",
          "denies hemoptysis or pleuritic chest pain at rest.",
          "was found to have an oxygen saturation of 89 percent on room air."},
         {"The patient was admitted with community acquired pneumonia and started on empiric antibiotics.",
          "Supplemental oxygen was weaned as the infiltrate improved on serial exams.",
          "Blood and sputum cultures remained without growth through discharge.",
          "Fever curve trended down after the second hospital day.",
          "Antibiotic coverage was narrowed once clinical improvement was sustained.",
          "The patient was transitioned to an oral regimen to complete the course at home."},
         {"You were admitted because you had a lung infection called pneumonia.",
          "We treated you with antibiotics and your breathing improved.",
          "Please finish the full course of the antibiotic even if you feel well.",
          "Call your doctor if your fevers return or your breathing gets worse.",
          "Rest and drink plenty of fluids over the next week."},
         {"azithromycin 500 mg PO DAILY", "ceftriaxone 1 g IV DAILY", "acetaminophen 650 mg PO Q6H PRN fever"},
         "CHEST (PA AND LAT): Right lower lobe consolidation consistent with pneumonia.",
         "Please follow up with your primary care physician in one week for a repeat chest film.",
         135, 105},
        {"Shortness of breath",
         {"Acute on chronic systolic heart failure", "Volume overload"},
         "None",
         {"presenting with progressive dyspnea on exertion and orthopnea.",
          "notes a seven pound weight gain over the preceding two weeks.",
          "sleeps on three pillows and reports new lower extremity swelling.",
          "denies chest pain, palpitations, or syncope."},
         {"The patient was admitted with decompensated heart failure and diuresed with intravenous furosemide.",
          "Daily weights and strict intake and output were followed with net negative goals.",
          "Renal function and electrolytes were monitored during diuresis and remained acceptable.",
          "The home guideline directed medical therapy was continued and optimized.",
          "Echocardiography showed a depressed ejection fraction consistent with prior studies.",
          "The patient was transitioned to an oral diuretic regimen once euvolemic."},
         {"You were admitted because extra fluid built up in your body and made it hard to breathe.",
          "We gave you water pills through the IV to remove the extra fluid.",
          "Weigh yourself every morning and call your doctor if you gain more than three pounds.",
          "Please limit salt in your diet and follow your fluid restriction.",
          "Take your heart medications every day as prescribed."},
         {"furosemide 40 mg PO DAILY", "metoprolol succinate 50 mg PO DAILY", "lisinopril 10 mg PO DAILY"},
         "CHEST (PORTABLE AP): Pulmonary vascular congestion with small bilateral effusions.",
         "Please follow up in the heart failure clinic within seven days of discharge.",
         520, 320},
        {"Melena",
         {"Acute blood loss anemia", "Upper gastrointestinal bleed"},
         "Esophagogastroduodenoscopy",
         {"presenting with two days of dark tarry stools and lightheadedness.",
          "reports epigastric discomfort and daily ibuprofen use for knee pain.",
          "denies hematemesis, though felt faint when standing this morning.",
          "was noted to be orthostatic in the emergency department."},
         {"The patient was admitted with melena and acute blood loss anemia.",
          "Serial hemoglobin values were followed and transfusion thresholds observed.",
          "An upper endoscopy identified a duodenal ulcer which was treated endoscopically.",
          "High dose proton pump inhibitor therapy was started and continued.",
          "Nonsteroidal anti-inflammatory drugs were discontinued with counseling provided.",
          "Diet was advanced without recurrence of bleeding before discharge."},
         {"You were admitted because you were bleeding from an ulcer in your intestine.",
          "The stomach doctors treated the ulcer during an endoscopy and the bleeding stopped.",
          "Please take the acid blocking medication twice a day.",
          "Do not take ibuprofen or similar pain medicines until cleared by your doctor.",
          "Return to the emergency department if you see blood in your stool or feel faint."},
         {"pantoprazole 40 mg PO BID", "ferrous sulfate 325 mg PO DAILY", "acetaminophen 650 mg PO Q6H PRN pain"},
         "EGD REPORT IMAGE: Single duodenal ulcer with visible vessel, treated with clips.",
         "Please schedule a repeat endoscopy in eight weeks with gastroenterology.",
         340, 230},
        {"Palpitations",
         {"Atrial fibrillation with rapid ventricular response"},
         "None",
         {"presenting with sudden onset fluttering in the chest since this morning.",
          "reports mild lightheadedness but no chest pain or dyspnea.",
          "has never had a similar episode documented before.",
          "was found to have an irregularly irregular rhythm at 142 beats per minute."},
         {"The patient was admitted with atrial fibrillation with rapid ventricular response.",
          "Rate control was achieved with titrated beta blockade.",
          "Anticoagulation was initiated after stroke risk assessment.",
          "Telemetry showed conversion to sinus rhythm on hospital day two.",
          "Thyroid studies and electrolytes were checked and unremarkable.",
          "The patient remained in sinus rhythm for the remainder of the stay."},
         {"You were admitted because your heart was beating fast and irregularly.",
          "We gave you medicine to slow the heart and started a blood thinner to prevent stroke.",
          "Take the blood thinner every day and do not miss doses.",
          "Check your pulse daily and call if it is over 110 or you feel faint.",
          "Avoid alcohol and caffeine until your follow up visit."},
         {"metoprolol tartrate 25 mg PO BID", "apixaban 5 mg PO BID"},
         "CHEST (PA AND LAT): No acute cardiopulmonary process.",
         "Please follow up with cardiology in two weeks for rhythm assessment.",
         150, 115},
        {"Left leg redness",
         {"Cellulitis of left lower extremity"},
         "None",
         {"presenting with two days of spreading redness and warmth of the left shin.",
          "reports a small scratch from gardening the week prior.",
          "denies fevers at home though felt warm last night.",
          "has no prior history of skin infections."},
         {"The patient was admitted with left lower extremity cellulitis.",
          "Intravenous antibiotics were started and the margin of erythema was marked and followed.",
          "The erythema receded within the marked border by hospital day two.",
          "The leg was elevated and warm compresses applied.",
          "There was no abscess on bedside ultrasound.",
          "The patient was transitioned to oral antibiotics to complete therapy."},
         {"You were admitted because of a skin infection in your left leg.",
          "We treated the infection with IV antibiotics and it improved.",
          "Finish all of the antibiotic pills even if the leg looks better.",
          "Keep the leg elevated when sitting and watch the redness.",
          "Call your doctor if the redness spreads or you develop fevers."},
         {"cephalexin 500 mg PO QID", "acetaminophen 650 mg PO Q6H PRN pain"},
         "LEFT LOWER EXTREMITY ULTRASOUND: No abscess or deep venous thrombosis.",
         "Please see your primary care physician in three to five days to recheck the leg.",
         90, 70},
        {"Epigastric pain",
         {"Acute pancreatitis", "Alcohol use disorder"},
         "None",
         {"presenting with severe epigastric pain radiating to the back since last night.",
          "reports nausea with several episodes of emesis.",
          "endorses regular alcohol use on weekends.",
          "notes the pain is worse with eating."},
         {"The patient was admitted with acute pancreatitis managed with aggressive intravenous hydration.",
          "Pain was controlled and antiemetics provided while the patient was kept fasting.",
          "Lipase trended down and diet was advanced as tolerated.",
          "Right upper quadrant ultrasound showed no gallstones.",
          "Alcohol cessation counseling was provided with social work involvement.",
          "The patient tolerated a regular diet prior to discharge."},
         {"You were admitted because your pancreas was inflamed, called pancreatitis.",
          "We treated you with IV fluids and medicines for pain and nausea.",
          "Do not drink alcohol, as it likely caused this and can make it happen again.",
          "Start with small low fat meals and advance as tolerated.",
          "Return if you have severe belly pain, vomiting, or fevers."},
         {"ondansetron 4 mg PO Q8H PRN nausea", "acetaminophen 650 mg PO Q6H PRN pain", "thiamine 100 mg PO DAILY"},
         "RUQ ULTRASOUND: No cholelithiasis; pancreas partly obscured by bowel gas.",
         "Please follow up with your primary care physician within one week.",
         200, 150},
        {"Wheezing and dyspnea",
         {"Chronic obstructive pulmonary disease exacerbation"},
         "None",
         {"presenting with three days of worsening wheeze and breathlessness.",
          "reports increased sputum production with a change in color.",
          "uses home inhalers but ran out last week.",
          "has a forty pack year smoking history."},
         {"The patient was admitted with an exacerbation of chronic obstructive pulmonary disease.",
          "Bronchodilators, systemic steroids, and azithromycin were initiated.",
          "Oxygen was titrated to target saturations with improvement in work of breathing.",
          "The patient was counseled on smoking cessation and offered nicotine replacement.",
          "Inhaler technique was reviewed with the respiratory therapist.",
          "Symptoms returned to baseline on hospital day three."},
         {"You were admitted because your lung disease flared up and made breathing difficult.",
          "We treated you with steroids, antibiotics, and breathing treatments.",
          "Use your inhalers exactly as prescribed and finish the steroid taper.",
          "Quitting smoking is the most important thing you can do for your lungs.",
          "Seek care right away if your breathing worsens again."},
         {"prednisone 40 mg PO DAILY", "azithromycin 250 mg PO DAILY", "tiotropium 18 mcg INH DAILY"},
         "CHEST (PA AND LAT): Hyperinflation without focal consolidation.",
         "Please follow up with pulmonology in two to three weeks.",
         170, 130},
        {"Flank pain and fever",
         {"Acute pyelonephritis"},
         "None",
         {"presenting with right flank pain, fevers, and painful urination.",
          "reports urinary frequency for the past three days.",
          "denies vaginal discharge or recent instrumentation.",
          "had a temperature of 102.4 on arrival."},
         {"The patient was admitted with acute pyelonephritis and started on intravenous antibiotics.",
          "Urine cultures grew a pansensitive organism and therapy was tailored.",
          "Fevers resolved within forty eight hours of admission.",
          "Renal ultrasound showed no obstruction or abscess.",
          "Oral intake improved and intravenous fluids were discontinued.",
          "The patient was discharged on an oral agent to complete treatment."},
         {"You were admitted because of a kidney infection.",
          "We treated the infection with IV antibiotics and your fevers resolved.",
          "Complete the full antibiotic course at home.",
          "Drink plenty of water over the coming days.",
          "Return if you develop fevers, vomiting, or worsening back pain."},
         {"ciprofloxacin 500 mg PO BID", "acetaminophen 650 mg PO Q6H PRN fever"},
         "RENAL ULTRASOUND: No hydronephrosis or perinephric collection.",
         "Please see your primary care physician within one week to confirm resolution.",
         110, 85},
        {"Right sided weakness",
         {"Acute ischemic stroke"},
         "None",
         {"presenting with acute onset right arm weakness and slurred speech.",
          "symptoms began approximately two hours prior to arrival.",
          "has known hypertension with inconsistent medication use.",
          "was last seen well at breakfast by family."},
         {"The patient was admitted with an acute ischemic stroke and monitored in the stroke unit.",
          "Neurologic checks were performed and deficits improved steadily.",
          "Vascular imaging identified the likely culprit lesion without intervention required.",
          "High intensity statin and antiplatelet therapy were initiated.",
          "Speech and physical therapy evaluated the patient and recommended outpatient services.",
          "Blood pressure was allowed to autoregulate before gentle normalization.",
          "Swallow evaluation was passed prior to resuming a regular diet."},
         {"You were admitted because you had a stroke, which means a part of the brain did not get enough blood.",
          "Your strength and speech improved during the stay.",
          "Take the new blood thinner and cholesterol medicine every day.",
          "Go to your therapy appointments to continue your recovery.",
          "Call emergency services immediately if you have new weakness, numbness, or trouble speaking."},
         {"aspirin 81 mg PO DAILY", "atorvastatin 80 mg PO DAILY", "lisinopril 20 mg PO DAILY"},
         "CT HEAD WITHOUT CONTRAST: Subtle hypodensity in the left corona radiata.",
         "Please follow up in the stroke clinic in one month and with neurology as scheduled.",
         260, 180},
        {"Nausea and vomiting",
         {"Diabetic ketoacidosis", "Type 1 diabetes mellitus"},
         "None",
         {"presenting with a day of nausea, vomiting, and abdominal discomfort.",
          "reports missing insulin doses while ill with a cold.",
          "describes increased thirst and urination over two days.",
          "was found to have an elevated glucose with ketones on arrival."},
         {"The patient was admitted with diabetic ketoacidosis managed on an insulin infusion.",
          "The anion gap closed with fluids and insulin, and electrolytes were repleted.",
          "The infusion was bridged to a subcutaneous basal bolus regimen.",
          "Diabetes education reviewed sick day rules and glucometer technique.",
          "Precipitating infection workup was unrevealing.",
          "Glucose values were stable on the home regimen before discharge."},
         {"You were admitted because your blood sugar was dangerously high and acid built up in your blood.",
          "We treated you with IV fluids and insulin until your labs returned to normal.",
          "Never skip insulin doses, even when you are sick.",
          "Check your blood sugar at least four times a day this week.",
          "Call your doctor if sugars stay above 300 or you cannot keep fluids down."},
         {"insulin glargine 24 units SC QHS", "insulin lispro sliding scale SC TID with meals"},
         "CHEST (PA AND LAT): No acute process.",
         "Please follow up in the diabetes clinic within one week.",
         120, 95},
    };
    return pool;
}

const std::vector<const char*>& bhc_generic() {
    static const std::vector<const char*> pool = {
        "The patient remained hemodynamically stable throughout the hospitalization.",
        "Home medications were continued without interruption unless otherwise noted.",
        "Physical therapy evaluated the patient and cleared them for home.",
        "Nutrition was consulted and dietary recommendations were reviewed.",
        "Venous thromboembolism prophylaxis was maintained during the stay.",
        "Electrolytes were repleted as needed per protocol.",
        "The patient tolerated the treatment course without adverse reactions.",
        "Care coordination arranged appropriate outpatient services before discharge.",
        "Repeat laboratory studies showed steady improvement before discharge.",
        "The remainder of the hospital course was uncomplicated.",
    };
    return pool;
}

const std::vector<const char*>& di_generic() {
    static const std::vector<const char*> pool = {
        "Please take all of your medications exactly as prescribed.",
        "Keep all of your scheduled follow up appointments.",
        "It was a pleasure taking care of you during your stay.",
        "If you have questions about your recovery, call your care team.",
        "Seek emergency care for chest pain, trouble breathing, or confusion.",
        "Continue a healthy diet and stay active as tolerated.",
        "A nurse may call you after discharge to check on your progress.",
        "Bring your updated medication list to every appointment.",
    };
    return pool;
}

const std::vector<const char*>& pmh_pool() {
    static const std::vector<const char*> pool = {
        "Hypertension", "Hyperlipidemia", "Type 2 diabetes mellitus", "Osteoarthritis",
        "Gastroesophageal reflux disease", "Seasonal allergies", "Remote appendectomy",
        "Depression", "Hypothyroidism", "Chronic low back pain",
    };
    return pool;
}

const std::vector<const char*>& comorbidity_pool() {
    static const std::vector<const char*> pool = {
        "Hypertension", "Hyperlipidemia", "Type 2 diabetes mellitus",
        "Chronic kidney disease stage 3", "Obesity",
    };
    return pool;
}

const std::vector<const char*>& lab_pool() {
    static const std::vector<const char*> pool = {
        "WBC 11.2", "Hgb 12.8", "Plt 244", "Na 138", "K 4.1", "Cl 102", "HCO3 24",
        "BUN 18", "Cr 0.9", "Glucose 132", "Lactate 1.4", "Troponin less than 0.01",
        "ALT 28", "AST 31", "Alk Phos 88", "Tbili 0.7", "INR 1.1", "Lipase 40",
    };
    return pool;
}

std::string sentences_to_words(const std::vector<const char*>& primary,
                               const std::vector<const char*>& generic, Rng& rng,
                               std::size_t target_words, bool exact) {
    std::string text;
    std::size_t count = 0;
    std::size_t primary_next = 0;
    while (count < target_words) {
        const char* s;
        if (primary_next < primary.size()) s = primary[primary_next++];
        else s = generic[rng.bounded(generic.size())];
        if (!text.empty()) text += '\n';
        text += s;
        count = segmenter::word_count(text);
    }
    if (exact && count > target_words) return segmenter::truncate_to_words(text, target_words);
    return text;
}

// Target lengths are functions of chief complaint and diagnoses alone, so
// records with matching context carry matching targets for retrieval to find.
std::size_t bhc_target_words(const Condition& cond, const std::vector<std::string>& diagnoses) {
    std::uint64_t h = fnv1a64(join(diagnoses, "|"));
    long jitter = static_cast<long>(h % 31) - 15;
    long words = cond.bhc_base_words + 6 * static_cast<long>(diagnoses.size()) + jitter;
    return static_cast<std::size_t>(std::max(40L, words));
}

std::size_t di_target_words(const Condition& cond, const std::vector<std::string>& diagnoses) {
    std::uint64_t h = fnv1a64(join(diagnoses, "|") + "#di");
    long jitter = static_cast<long>(h % 21) - 10;
    long words = cond.di_base_words + 4 * static_cast<long>(diagnoses.size()) + jitter;
    return static_cast<std::size_t>(std::max(30L, words));
}

std::string build_gold_bhc(const Condition& cond, const std::vector<std::string>& diagnoses) {
    Rng rng(fnv1a64(cond.complaint));
    std::vector<const char*> primary(cond.bhc.begin(), cond.bhc.end());
    return sentences_to_words(primary, bhc_generic(), rng, bhc_target_words(cond, diagnoses), true);
}

std::string build_gold_di(const Condition& cond, const std::vector<std::string>& diagnoses) {
    Rng rng(fnv1a64(std::string(cond.complaint) + "#di"));
    std::size_t target = di_target_words(cond, diagnoses);
    std::string body = "Dear ___,\n";
    std::vector<const char*> primary(cond.di.begin(), cond.di.end());
    std::size_t closing_words = 8;
    std::size_t fill = target > closing_words + 2 ? target - closing_words - 2 : 1;
    body += sentences_to_words(primary, di_generic(), rng, fill, false);
    body += "\nWe wish you the best!\nYour ___ Team";
    return body;
}

std::string medication_list(const Condition& cond, Rng& rng) {
    std::string out;
    for (std::size_t i = 0; i < cond.meds.size(); ++i) {
        if (i) out += '\n';
        out += std::to_string(i + 1) + ". " + cond.meds[i];
    }
    if (rng.bounded(2) == 0)
        out += "\n" + std::to_string(cond.meds.size() + 1) + ". multivitamin 1 tab PO DAILY";
    return out;
}

std::string pick_lines(const std::vector<const char*>& pool, Rng& rng, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += '\n';
        out += pool[rng.bounded(pool.size())];
    }
    return out;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(std::uint64_t seed, std::size_t n) {
    if (n == 0) raise(ErrorKind::validation, "synthetic corpus size must be at least 1");
    const auto& pool = conditions();

    SyntheticCorpus synth;
    synth.aux.mapping = AuxMapping::defaults();
    CsvTable patients;
    patients.columns = {"subject_id", "gender", "anchor_age", "anchor_year"};
    CsvTable admissions;
    admissions.columns = {"hadm_id", "subject_id", "admittime", "dischtime", "race"};
    CsvTable diagnoses_table;
    diagnoses_table.columns = {"hadm_id", "long_title"};
    CsvTable transfers;
    transfers.columns = {"hadm_id", "careunit", "intime"};
    CsvTable radiology;
    radiology.columns = {"hadm_id", "text"};

    static const char* units[] = {"Emergency Department", "Medicine", "MICU", "Cardiology", "Step Down"};
    static const char* races[] = {"WHITE", "BLACK/AFRICAN AMERICAN", "HISPANIC/LATINO", "ASIAN", "OTHER"};
    static const char* services[] = {"MEDICINE", "CARDIOLOGY", "NEUROLOGY", "SURGERY"};
    static const char* dispositions[] = {"Home", "Home With Service", "Extended Care"};
    static const char* allergy_opts[] = {"No Known Allergies / Adverse Drug Reactions", "Penicillins",
                                         "Sulfa (Sulfonamide Antibiotics)", "Shellfish"};

    struct PerRecord {
        std::size_t condition = 0;
        std::vector<std::string> diagnoses;
        std::string hadm_id;
        std::string subject_id;
    };
    std::vector<PerRecord> plan(n);

    for (std::size_t i = 0; i < n; ++i) {
        std::size_t pair = i / 2;
        Rng pair_rng(Rng::derive_seed(seed, 1000000 + pair));
        Rng rec_rng(Rng::derive_seed(seed, i));
        PerRecord& pr = plan[i];
        pr.condition = pair_rng.bounded(pool.size());
        const Condition& cond = pool[pr.condition];
        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "2%07zu", i);
        pr.hadm_id = idbuf;
        std::snprintf(idbuf, sizeof(idbuf), "1%07zu", i);
        pr.subject_id = idbuf;
        for (const char* d : cond.diagnoses) pr.diagnoses.push_back(d);
        if (i % 2 == 1)
            pr.diagnoses.push_back(comorbidity_pool()[pair_rng.bounded(comorbidity_pool().size())]);

        int anchor_age = 18 + static_cast<int>(rec_rng.bounded(75));
        int anchor_year = 2008 + static_cast<int>(rec_rng.bounded(12));
        int admit_year = anchor_year + static_cast<int>(rec_rng.bounded(6));
        unsigned month = 1 + static_cast<unsigned>(rec_rng.bounded(12));
        unsigned day = 1 + static_cast<unsigned>(rec_rng.bounded(28));
        std::int64_t admit = days_from_civil(admit_year, month, day) * 86400 +
                             static_cast<std::int64_t>(rec_rng.bounded(86400));
        double stay_h = std::min(720.0, std::max(6.0, rec_rng.lognormal(3.9, 0.7)));
        std::int64_t disch = admit + static_cast<std::int64_t>(stay_h * 3600.0);

        patients.rows.push_back({pr.subject_id, rec_rng.bounded(2) ? "F" : "M",
                                 std::to_string(anchor_age), std::to_string(anchor_year)});
        admissions.rows.push_back({pr.hadm_id, pr.subject_id, format_timestamp(admit),
                                   format_timestamp(disch), races[rec_rng.bounded(5)]});
        for (const auto& d : pr.diagnoses) diagnoses_table.rows.push_back({pr.hadm_id, d});

        std::size_t n_moves = 1 + rec_rng.bounded(3);
        std::vector<std::vector<std::string>> move_rows;
        std::int64_t t = admit;
        for (std::size_t k = 0; k < n_moves; ++k) {
            move_rows.push_back({pr.hadm_id, units[rec_rng.bounded(5)], format_timestamp(t)});
            t += 3600 + static_cast<std::int64_t>(rec_rng.bounded(36000));
        }
        // Reverse chronological insertion keeps the sort in
        // aggregate_patient_context honest.
        for (auto it = move_rows.rbegin(); it != move_rows.rend(); ++it) transfers.rows.push_back(*it);

        std::size_t n_rad = 1 + rec_rng.bounded(3);
        for (std::size_t k = 0; k < n_rad; ++k) {
            std::string note = pool[pr.condition].imaging;
            if (k > 0) note = "FOLLOW UP STUDY " + std::to_string(k) + ": " + note;
            radiology.rows.push_back({pr.hadm_id, note});
        }
    }

    synth.aux.patients = std::move(patients);
    synth.aux.admissions = std::move(admissions);
    synth.aux.diagnoses = std::move(diagnoses_table);
    synth.aux.transfers = std::move(transfers);
    synth.aux.radiology = std::move(radiology);
    synth.aux.finalize();

    const auto& specs = segmenter::default_section_specs();
    auto header_of = [&](const char* name) -> const std::string& {
        const segmenter::SectionSpec* spec = find_spec(specs, name);
        if (!spec) raise(ErrorKind::contract, std::string("missing section spec: ") + name);
        return spec->header_patterns.front();
    };

    for (std::size_t i = 0; i < n; ++i) {
        std::size_t pair = i / 2;
        Rng pair_rng(Rng::derive_seed(seed, 2000000 + pair));
        Rng rec_rng(Rng::derive_seed(seed, 3000000 + i));
        const PerRecord& pr = plan[i];
        const Condition& cond = pool[pr.condition];

        PatientAdmissionSummary summary = aggregate_patient_context(pr.hadm_id, synth.aux);

        std::string gold_bhc = build_gold_bhc(cond, pr.diagnoses);
        std::string gold_di = build_gold_di(cond, pr.diagnoses);

        // Twins must share the retrieval-context sections almost byte for
        // byte, so everything here draws from the pair stream, not the
        // record stream.
        Rng hpi_rng(Rng::derive_seed(seed, 4000000 + pair));
        std::string hpi =
            "The patient presented " + std::string(cond.hpi.front()) + "\n" +
            sentences_to_words(std::vector<const char*>(cond.hpi.begin() + 1, cond.hpi.end()),
                               bhc_generic(), hpi_rng,
                               20 + static_cast<std::size_t>(std::min(160.0, hpi_rng.lognormal(3.6, 0.5))),
                               false);

        Rng med_rng(Rng::derive_seed(seed, 5000000 + pair));
        std::string adm_meds = medication_list(cond, med_rng);
        std::string dc_meds = medication_list(cond, med_rng);
        std::string disposition = dispositions[pair_rng.bounded(3)];
        std::string condition_sec =
            "Mental Status: Clear and coherent.\nLevel of Consciousness: Alert and interactive.\n"
            "Activity Status: Ambulatory - Independent.";
        std::string dc_dx = join(pr.diagnoses, "\n");

        std::vector<std::pair<const char*, std::string>> parts;
        parts.emplace_back("patient_admissions", render_patient_admissions(summary));
        parts.emplace_back("transfer_summary", join(summary.transfer_summary, "\n"));
        parts.emplace_back("service", services[rec_rng.bounded(4)]);
        parts.emplace_back("allergies", allergy_opts[rec_rng.bounded(4)]);
        parts.emplace_back("attending", "___.");
        parts.emplace_back("chief_complaint", cond.complaint);
        parts.emplace_back("major_surgical_procedure", cond.surgical);
        parts.emplace_back("history_of_present_illness", hpi);
        parts.emplace_back("review_of_system",
                           "Ten point review of systems negative except as noted above.");
        parts.emplace_back("past_medical_history",
                           pick_lines(pmh_pool(), rec_rng, 2 + rec_rng.bounded(4)));
        parts.emplace_back("social_history",
                           rec_rng.bounded(2) ? "Lives alone. Denies tobacco use. Occasional alcohol."
                                              : "Lives with family. Former smoker, quit ___. No drug use.");
        parts.emplace_back("family_history",
                           rec_rng.bounded(2) ? "Mother with hypertension. Father with diabetes."
                                              : "Non-contributory.");
        parts.emplace_back("physical_exam",
                           "VS: T 98.6 HR 82 BP 124/76 RR 16 SpO2 97% RA\n" +
                               pick_lines(lab_pool(), rec_rng, 1 + rec_rng.bounded(2)));
        parts.emplace_back("pertinent_results",
                           pick_lines(lab_pool(), rec_rng, 3 + rec_rng.bounded(8)));
        parts.emplace_back("imaging_and_studies", cond.imaging);
        parts.emplace_back("diagnoses", join(pr.diagnoses, "\n"));
        parts.emplace_back("brief_hospital_course", gold_bhc);
        parts.emplace_back("admission_medications", adm_meds);
        parts.emplace_back("discharge_medications", dc_meds);
        parts.emplace_back("discharge_disposition", disposition);
        parts.emplace_back("discharge_diagnoses", dc_dx);
        parts.emplace_back("discharge_condition", condition_sec);
        parts.emplace_back("discharge_instructions", gold_di);
        parts.emplace_back("followup_instructions", cond.followup);
        parts.emplace_back("provider", "___, MD");
        parts.emplace_back("code_status", rec_rng.bounded(4) ? "Full code" : "DNR/DNI");

        std::string text = "Name: ___          Unit No: ___\n\n";
        for (const auto& [name, body] : parts) {
            text += header_of(name);
            text += '\n';
            text += body;
            text += "\n\n";
        }

        DischargeRecord rec;
        rec.hadm_id = pr.hadm_id;
        rec.text = std::move(text);
        rec.admission = std::move(summary);
        {
            auto it = synth.aux.radiology_by_hadm.find(pr.hadm_id);
            if (it != synth.aux.radiology_by_hadm.end())
                for (std::size_t row : it->second)
                    rec.radiology_notes.push_back(synth.aux.radiology->rows[row][1]);
        }
        synth.corpus.records.push_back(std::move(rec));
        synth.gold_bhc[pr.hadm_id] = std::move(gold_bhc);
        synth.gold_di[pr.hadm_id] = std::move(gold_di);
    }
    return synth;
}

void write_synthetic_fixture(const SyntheticCorpus& synth, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::vector<std::string>> discharge_rows;
    for (const auto& rec : synth.corpus.records) discharge_rows.push_back({rec.hadm_id, rec.text});
    atomic_write_file(fs::path(dir) / "discharge.csv", format_csv({"hadm_id", "text"}, discharge_rows));
    auto dump = [&](const std::optional<CsvTable>& t, const char* name) {
        if (t) atomic_write_file(fs::path(dir) / name, format_csv(t->columns, t->rows));
    };
    dump(synth.aux.patients, "patients.csv");
    dump(synth.aux.admissions, "admissions.csv");
    dump(synth.aux.diagnoses, "diagnoses.csv");
    dump(synth.aux.transfers, "transfers.csv");
    dump(synth.aux.radiology, "radiology.csv");
    std::string gold;
    for (const auto& rec : synth.corpus.records) {
        nlohmann::json j;
        j["hadm_id"] = rec.hadm_id;
        j["bhc"] = synth.gold_bhc.at(rec.hadm_id);
        j["di"] = synth.gold_di.at(rec.hadm_id);
        gold += j.dump();
        gold += '\n';
    }
    atomic_write_file(fs::path(dir) / "gold.jsonl", gold);
}

std::vector<segmenter::SectionedLetter> segment_corpus(const Corpus& corpus,
                                                       const std::vector<segmenter::SectionSpec>& specs) {
    segmenter::SectionMatcher matcher(specs);
    std::vector<segmenter::SectionedLetter> out(corpus.records.size());
    const long long total = static_cast<long long>(corpus.records.size());
    WARD_PRAGMA_OMP(parallel for schedule(dynamic, 8))
    for (long long i = 0; i < total; ++i)
        out[static_cast<std::size_t>(i)] = matcher.segment(corpus.records[static_cast<std::size_t>(i)].text);
    return out;
}

segmenter::CorpusSections collect_sections(const Corpus& corpus,
                                           const std::vector<segmenter::SectionedLetter>& letters) {
    if (corpus.records.size() != letters.size())
        raise(ErrorKind::contract, "collect_sections: corpus/letter size mismatch");
    segmenter::CorpusSections out;
    for (std::size_t i = 0; i < letters.size(); ++i)
        for (const auto& [name, body] : letters[i].sections)
            out[name].emplace_back(corpus.records[i].hadm_id, body);
    return out;
}

void truncate_letters(const Corpus& corpus, std::vector<segmenter::SectionedLetter>& letters,
                      double percentile) {
    auto truncated = segmenter::truncate_corpus_sections(collect_sections(corpus, letters), percentile);
    std::map<std::string, std::size_t> cursor;
    for (auto& letter : letters)
        for (auto& [name, body] : letter.sections) {
            const auto& column = truncated.at(name);
            std::size_t at = cursor[name]++;
            if (at >= column.size())
                raise(ErrorKind::contract, "truncate_letters: section row drift for " + name);
            body = column[at].second;
        }
}

}  // namespace ward::corpus
