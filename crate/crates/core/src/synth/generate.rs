use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::PathBuf;

use chrono::{DateTime, FixedOffset, NaiveDate, SecondsFormat};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    GroundTruth, GtCorpus, GtDiscussion, GtList, GtMessage, GtQuote, GtRevision, SynthCorpus, SynthParams, CONFIG_FILE,
    CORPUS_NAME, DEV_LIST, GROUND_TRUTH_FILE, KEYWORD, USER_LIST,
};
use crate::config::{AnalysisConfig, CategorySpec, CorpusSpec, ListSpec, Orientation, RevisionSources, Thresholds};
use crate::error::ArgumentError;
use crate::ingest::{RevisionLogEntry, RosterEntry};
use crate::model::{Alias, MessageKey, ParticipantId, Role, Space, Timestamp, SECONDS_PER_DAY};
use crate::store::to_json_bytes;

// Body vocabulary and participant names come from disjoint alphabets, so no
// body word can ever equal a name.
const WORD_CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const NAME_CONSONANTS: &[u8] = b"hjwy";
const VOWELS: &[u8] = b"aeiou";

const DATE_FROM: &str = "2003-01-01";
const DATE_TO: &str = "2012-12-31";

struct Person {
    name: String,
    role: Role,
    email: String,
    handle: String,
    on_list: [bool; 2],
}

struct Draft {
    list: usize,
    message_id: String,
    sender: usize,
    date: Timestamp,
    subject: String,
    parent: Option<usize>,
    lose_headers: bool,
    lines: Vec<String>,
    gt: Option<usize>,
    quote_lines: Vec<String>,
    /// (source draft, lines as written, truncated) of this draft's own
    /// depth-1 quote.
    quoted: Option<(usize, Vec<String>, bool)>,
}

struct Gen {
    rng: ChaCha8Rng,
    seed: u64,
    vocab: Vec<String>,
    used_subject_words: HashSet<String>,
    people: Vec<Person>,
    drafts: Vec<Draft>,
    gt_keys: Vec<(usize, String)>,
}

fn list_id(list: usize) -> &'static str {
    if list == 0 {
        USER_LIST
    } else {
        DEV_LIST
    }
}

fn syllables(rng: &mut ChaCha8Rng, consonants: &[u8], n: usize) -> String {
    (0..n)
        .map(|_| {
            let c = consonants[rng.gen_range(0..consonants.len())] as char;
            let v = VOWELS[rng.gen_range(0..VOWELS.len())] as char;
            format!("{c}{v}")
        })
        .collect()
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn base_time() -> Timestamp {
    NaiveDate::from_ymd_opt(2003, 1, 6)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|d| d.and_utc().timestamp())
        .expect("valid constant date")
}

impl Gen {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen = HashSet::new();
        let mut vocab = Vec::new();
        while vocab.len() < 400 {
            let n = rng.gen_range(2..=3);
            let w = syllables(&mut rng, WORD_CONSONANTS, n);
            if seen.insert(w.clone()) {
                vocab.push(w);
            }
        }
        Gen {
            rng,
            seed,
            vocab,
            used_subject_words: HashSet::new(),
            people: Vec::new(),
            drafts: Vec::new(),
            gt_keys: Vec::new(),
        }
    }

    fn word(&mut self) -> String {
        self.vocab.choose(&mut self.rng).expect("non-empty vocabulary").clone()
    }

    fn subject_word(&mut self) -> String {
        loop {
            let w = syllables(&mut self.rng, WORD_CONSONANTS, 3);
            if self.used_subject_words.insert(w.clone()) {
                return w;
            }
        }
    }

    fn line(&mut self) -> String {
        let n = self.rng.gen_range(6..=9);
        (0..n).map(|_| self.word()).collect::<Vec<_>>().join(" ")
    }

    fn own_lines(&mut self) -> Vec<String> {
        let n = self.rng.gen_range(2..=4);
        (0..n).map(|_| self.line()).collect()
    }

    fn make_people(&mut self, params: &SynthParams) {
        let mut names = HashSet::new();
        let mut handles = HashSet::new();
        for role in [Role::ProjectLeader, Role::Administrator, Role::Developer, Role::User] {
            let count = params.n_participants_per_role.get(&role).copied().unwrap_or(0);
            for _ in 0..count {
                let (first, last, handle) = loop {
                    let first = syllables(&mut self.rng, NAME_CONSONANTS, 2);
                    let last = syllables(&mut self.rng, NAME_CONSONANTS, 3);
                    let handle = format!("{}{}", &first[..1], last);
                    if !names.contains(&(first.clone(), last.clone())) && !handles.contains(&handle) {
                        break (first, last, handle);
                    }
                };
                names.insert((first.clone(), last.clone()));
                handles.insert(handle.clone());
                let on_list = match role {
                    Role::User => [true, self.rng.gen_bool(params.common_rate)],
                    Role::ProjectLeader => [self.rng.gen_bool(0.5), true],
                    _ => [self.rng.gen_bool(params.common_rate), true],
                };
                self.people.push(Person {
                    name: format!("{} {}", capitalize(&first), capitalize(&last)),
                    role,
                    email: format!("{first}.{last}@example.org"),
                    handle,
                    on_list,
                });
            }
        }
    }

    fn pool(&self, list: usize) -> Vec<usize> {
        (0..self.people.len())
            .filter(|&i| self.people[i].on_list[list])
            .collect()
    }

    fn next_id(&self, list: usize) -> String {
        format!("{}.{}.s{}@synth.invalid", self.drafts.len(), list_id(list), self.seed)
    }

    fn push(&mut self, list: usize, sender: usize, date: Timestamp, subject: String, parent: Option<usize>) -> usize {
        let lines = self.own_lines();
        let id = self.next_id(list);
        self.drafts.push(Draft {
            list,
            message_id: id,
            sender,
            date,
            subject,
            parent,
            lose_headers: false,
            lines,
            gt: None,
            quote_lines: Vec::new(),
            quoted: None,
        });
        self.drafts.len() - 1
    }

    fn gap(&mut self) -> i64 {
        self.rng.gen_range(1800..=2 * SECONDS_PER_DAY)
    }

    #[allow(clippy::too_many_arguments)]
    fn thread(
        &mut self,
        list: usize,
        root_subject: &str,
        reply_subject: &str,
        start: Timestamp,
        n: usize,
        forced: &[usize],
        pool: &[usize],
        gt: Option<usize>,
        header_loss: f64,
    ) -> Result<Vec<usize>, ArgumentError> {
        if pool.is_empty() && forced.is_empty() {
            return Err(ArgumentError::Invalid(format!(
                "no eligible participants for a discussion on {}",
                list_id(list)
            )));
        }
        let mut positions: Vec<usize> = (0..n).collect();
        positions.shuffle(&mut self.rng);
        let forced_at: BTreeMap<usize, usize> = positions.iter().copied().zip(forced.iter().copied()).collect();
        let mut idxs: Vec<usize> = Vec::with_capacity(n);
        let mut t = start;
        for k in 0..n {
            let sender = match forced_at.get(&k) {
                Some(&p) => p,
                None => *pool
                    .choose(&mut self.rng)
                    .or(forced.first())
                    .expect("pool or forced non-empty"),
            };
            let parent = (k > 0).then(|| idxs[self.rng.gen_range(0..k)]);
            let subject = if k == 0 { root_subject } else { reply_subject };
            let i = self.push(list, sender, t, subject.to_string(), parent);
            if k > 0 {
                self.drafts[i].lose_headers = self.rng.gen_bool(header_loss);
            }
            self.drafts[i].gt = gt;
            idxs.push(i);
            t += self.gap();
        }
        Ok(idxs)
    }

    fn thread_len(&mut self, params: &SynthParams, min: usize) -> usize {
        let max = (2.0 * params.message_rate - 1.0).round().max(1.0) as usize;
        self.rng.gen_range(1..=max).max(min)
    }

    fn new_gt(&mut self, list: usize, key: String) -> usize {
        self.gt_keys.push((list, key));
        self.gt_keys.len() - 1
    }

    fn on_topic_subject(&mut self, list: usize) -> (String, String, String) {
        let mut base = format!(
            "{} {} {}",
            capitalize(KEYWORD),
            self.subject_word(),
            self.subject_word()
        );
        if self.rng.gen_bool(0.5) {
            let term = STAGE_TERMS.choose(&mut self.rng).expect("non-empty");
            base = format!("{base} {term}");
        }
        let tagged = if list == 1 && self.rng.gen_bool(0.5) {
            format!("[{DEV_LIST}] {base}")
        } else {
            base.clone()
        };
        let reply = format!("Re: {tagged}");
        (base.to_lowercase(), tagged, reply)
    }

    fn off_topic_subject(&mut self) -> String {
        let w: Vec<String> = (0..3).map(|_| self.subject_word()).collect();
        capitalize(&w.join(" "))
    }
}

/// Words that steer a subject into a design step.
const STAGE_TERMS: &[&str] = &["wish", "proposal", "pep", "rounding", "tutorial", "bug", "announce"];

/// Builds two mbox archives, two revision logs, a roster, a ready config
/// and the ground truth for `params`.
pub fn generate_corpus(params: &SynthParams) -> Result<SynthCorpus, ArgumentError> {
    params.validate()?;
    let mut g = Gen::new(params.seed);
    g.make_people(params);

    let mut all: Vec<usize> = (0..g.people.len()).collect();
    all.shuffle(&mut g.rng);
    let planted: Vec<usize> = all[..params.planted_cross_count].to_vec();
    for &p in &planted {
        g.people[p].on_list = [true, true];
    }
    let planted_set: BTreeSet<usize> = planted.iter().copied().collect();
    let users: Vec<usize> = (0..g.people.len())
        .filter(|&i| g.people[i].role == Role::User)
        .collect();
    let champion = users.choose(&mut g.rng).copied();

    let base = base_time();
    let spacing = 5 * SECONDS_PER_DAY;
    let span = spacing * params.n_discussions_per_list.max(1) as i64;
    let pools = [g.pool(0), g.pool(1)];
    let mut pair_ids: Vec<(usize, usize)> = Vec::new();

    // On-topic discussions. The first `parallel_pair_count` user-list
    // discussions each get a dev-list partner with the same subject.
    for i in 0..params.n_discussions_per_list {
        let start = base + i as i64 * spacing + g.rng.gen_range(0..2 * SECONDS_PER_DAY);
        let (key, root, reply) = g.on_topic_subject(0);
        let forced: Vec<usize> = if i < params.parallel_pair_count {
            planted
                .iter()
                .copied()
                .skip(i)
                .step_by(params.parallel_pair_count)
                .collect()
        } else {
            Vec::new()
        };
        let paired = i < params.parallel_pair_count;
        let n = g.thread_len(params, if paired { forced.len().max(2) } else { 1 });
        let gt = g.new_gt(0, key.clone());
        let a = g.thread(
            0,
            &root,
            &reply,
            start,
            n,
            &forced,
            &pools[0],
            Some(gt),
            params.header_loss_rate,
        )?;

        let (b_key, b_root, b_reply, b_start, b_forced, b_pool, b_min) = if paired {
            let a_start = g.drafts[a[0]].date;
            let a_end = g.drafts[*a.last().expect("n >= 2")].date;
            let a_posters: BTreeSet<usize> = a.iter().map(|&d| g.drafts[d].sender).collect();
            let pool: Vec<usize> = pools[1]
                .iter()
                .copied()
                .filter(|p| planted_set.contains(p) || !a_posters.contains(p))
                .collect();
            let tagged = if g.rng.gen_bool(0.5) {
                format!("[{DEV_LIST}] {root}")
            } else {
                root.clone()
            };
            let reply = format!("Re: {tagged}");
            (
                key.clone(),
                tagged,
                reply,
                a_start + (a_end - a_start) / 2,
                forced.clone(),
                pool,
                forced.len().max(2),
            )
        } else {
            let (k, r, rp) = g.on_topic_subject(1);
            let start = base + i as i64 * spacing + g.rng.gen_range(0..4 * SECONDS_PER_DAY);
            (k, r, rp, start, Vec::new(), pools[1].clone(), 1)
        };
        let n = g.thread_len(params, b_min);
        let gt_b = g.new_gt(1, b_key);
        let b = g.thread(
            1,
            &b_root,
            &b_reply,
            b_start,
            n,
            &b_forced,
            &b_pool,
            Some(gt_b),
            params.header_loss_rate,
        )?;
        if paired {
            pair_ids.push((a[0], b[0]));
        }
    }

    for (list, pool) in pools.iter().enumerate() {
        // Mother threads: an off-topic root whose sub-thread drifts on topic.
        for _ in 0..params.mother_threads_per_list {
            let start = base + g.rng.gen_range(0..span);
            let s = g.off_topic_subject();
            let re_s = format!("Re: {s}");
            let drift = format!("{} {} (was: {s})", capitalize(KEYWORD), g.subject_word());
            let re_drift = format!("Re: {drift}");
            let gt = g.new_gt(list, s.to_lowercase());
            let pick = |g: &mut Gen| *pool.choose(&mut g.rng).expect("validated pool");
            let mut t = start;
            let sender = pick(&mut g);
            let r = g.push(list, sender, t, s.clone(), None);
            t += g.gap();
            let sender = pick(&mut g);
            let a = g.push(list, sender, t, re_s.clone(), Some(r));
            t += g.gap();
            let sender = pick(&mut g);
            g.push(list, sender, t, re_s.clone(), Some(r));
            t += g.gap();
            let sender = pick(&mut g);
            let b = g.push(list, sender, t, drift, Some(a));
            let mut members = vec![r, a, b];
            let more = g.thread_len(params, 1) - 1;
            for _ in 0..more {
                t += g.gap();
                let parent = members[2 + g.rng.gen_range(0..members.len() - 2)];
                let sender = pick(&mut g);
                members.push(g.push(list, sender, t, re_drift.clone(), Some(parent)));
            }
            for m in members {
                g.drafts[m].gt = Some(gt);
            }
        }
        for _ in 0..params.offtopic_per_list {
            let start = base + g.rng.gen_range(0..span);
            let s = g.off_topic_subject();
            let n = g.rng.gen_range(2..=4);
            g.thread(list, &s, &format!("Re: {s}"), start, n, &[], pool, None, 0.0)?;
        }
        for _ in 0..params.out_of_range_per_list {
            let start = base - 200 * SECONDS_PER_DAY + g.rng.gen_range(0..30 * SECONDS_PER_DAY);
            let (_, root, reply) = g.on_topic_subject(list);
            let n = g.rng.gen_range(2..=3);
            g.thread(list, &root, &reply, start, n, &[], pool, None, 0.0)?;
        }
    }

    // Strictly increasing timestamps over the whole corpus.
    let mut order: Vec<usize> = (0..g.drafts.len()).collect();
    order.sort_by_key(|&i| (g.drafts[i].date, i));
    let mut last = i64::MIN;
    for &i in &order {
        if g.drafts[i].date <= last {
            g.drafts[i].date = last + 1;
        }
        last = g.drafts[i].date;
    }

    let mut gt_members: Vec<Vec<usize>> = vec![Vec::new(); g.gt_keys.len()];
    for &i in &order {
        if let Some(d) = g.drafts[i].gt {
            gt_members[d].push(i);
        }
    }

    let quotes = plan_quotes(&mut g, params, &order, &gt_members);

    let discussions: Vec<GtDiscussion> = gt_members
        .iter()
        .zip(&g.gt_keys)
        .map(|(members, (list, key))| GtDiscussion {
            discussion_id: format!("{}:{}", list_id(*list), g.drafts[members[0]].message_id),
            list_id: list_id(*list).to_string(),
            subject_key: key.clone(),
            messages: members
                .iter()
                .map(|&i| GtMessage {
                    message_id: g.drafts[i].message_id.clone(),
                    sender: ParticipantId::new(g.people[g.drafts[i].sender].name.clone()),
                    date: g.drafts[i].date,
                })
                .collect(),
        })
        .collect();

    let (revisions, logs) = make_revisions(&mut g, params, base);

    let mut files: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    let mut malformed = 0;
    let mut mboxes: [Vec<String>; 2] = [Vec::new(), Vec::new()];
    for &i in &order {
        let entry = render_message(&mut g, i);
        mboxes[g.drafts[i].list].push(entry);
    }
    let written = g.drafts.len();
    let n_malformed = (params.malformed_rate * written as f64).round() as usize;
    for k in 0..n_malformed {
        let list = g.rng.gen_range(0..2);
        let entry = malformed_entry(&mut g, k);
        let at = g.rng.gen_range(0..=mboxes[list].len());
        mboxes[list].insert(at, entry);
        malformed += 1;
    }
    for (list, entries) in mboxes.iter().enumerate() {
        files.insert(format!("{}.mbox", list_id(list)), entries.concat().into_bytes());
    }
    files.insert("documentation.log".into(), logs[0].clone().into_bytes());
    files.insert("implementation.log".into(), logs[1].clone().into_bytes());

    let roster: Vec<RosterEntry> = g
        .people
        .iter()
        .map(|p| RosterEntry {
            canonical_name: p.name.clone(),
            role: p.role,
            aliases: vec![
                Alias {
                    name: p.name.clone(),
                    email: p.email.clone(),
                },
                Alias {
                    name: p.handle.clone(),
                    email: String::new(),
                },
            ],
        })
        .collect();
    files.insert("roster.json".into(), to_json_bytes(&roster));

    let champions: Vec<String> = champion.iter().map(|&c| g.people[c].name.clone()).collect();
    let lists = vec![
        GtList {
            list_id: USER_LIST.into(),
            orientation: Orientation::User,
            file: format!("{USER_LIST}.mbox"),
        },
        GtList {
            list_id: DEV_LIST.into(),
            orientation: Orientation::Developer,
            file: format!("{DEV_LIST}.mbox"),
        },
    ];
    let corpus = GtCorpus {
        name: CORPUS_NAME.into(),
        keywords: BTreeSet::from([KEYWORD.to_string()]),
        date_from: DATE_FROM.into(),
        date_to: DATE_TO.into(),
    };
    let config = AnalysisConfig {
        corpora: vec![CorpusSpec {
            name: corpus.name.clone(),
            keywords: corpus.keywords.clone(),
            date_from: corpus.date_from.clone(),
            date_to: corpus.date_to.clone(),
            keyword_mode: Default::default(),
        }],
        lists: lists
            .iter()
            .map(|l| ListSpec {
                list_id: l.list_id.clone(),
                orientation: l.orientation,
                archives: vec![PathBuf::from(&l.file)],
            })
            .collect(),
        roster: PathBuf::from("roster.json"),
        stage_lexicon: None,
        revisions: RevisionSources {
            documentation: vec![PathBuf::from("documentation.log")],
            implementation: vec![PathBuf::from("implementation.log")],
            credit_patterns: None,
        },
        thresholds: Thresholds::default(),
        categories: CategorySpec {
            champions: champions.clone(),
            ..CategorySpec::default()
        },
        output_dir: Some(PathBuf::from("out")),
    };
    files.insert(CONFIG_FILE.into(), to_json_bytes(&config));

    let ground_truth = GroundTruth {
        params: params.clone(),
        lists,
        roster,
        champions,
        corpus,
        discussions,
        cross: planted
            .iter()
            .map(|&p| ParticipantId::new(g.people[p].name.clone()))
            .collect(),
        parallel_pairs: pair_ids
            .iter()
            .map(|&(a, b)| {
                (
                    format!("{USER_LIST}:{}", g.drafts[a].message_id),
                    format!("{DEV_LIST}:{}", g.drafts[b].message_id),
                )
            })
            .collect(),
        quotes,
        revisions,
        messages_written: written,
        malformed_messages: malformed,
    };
    files.insert(GROUND_TRUTH_FILE.into(), to_json_bytes(&ground_truth));
    Ok(SynthCorpus { files, ground_truth })
}

fn hint_line(g: &mut Gen, source: usize) -> String {
    let name = g.people[g.drafts[source].sender].name.clone();
    match g.rng.gen_range(0..3) {
        0 => format!("{name} wrote:"),
        1 => {
            let day = DateTime::from_timestamp(g.drafts[source].date, 0)
                .map(|d| d.format("%Y-%m-%d").to_string())
                .unwrap_or_default();
            format!("On {day}, {name} wrote:")
        }
        _ => format!("[{name}]"),
    }
}

fn plan_quotes(g: &mut Gen, params: &SynthParams, order: &[usize], gt_members: &[Vec<usize>]) -> Vec<GtQuote> {
    let mut quotes = Vec::new();
    for &i in order {
        let Some(d) = g.drafts[i].gt else { continue };
        let earlier: Vec<usize> = gt_members[d]
            .iter()
            .copied()
            .filter(|&m| g.drafts[m].date < g.drafts[i].date)
            .collect();
        if earlier.is_empty() || !g.rng.gen_bool(params.quote_rate) {
            continue;
        }
        let parent = g.drafts[i].parent.filter(|p| earlier.contains(p));
        let source = match parent {
            Some(p) if g.rng.gen_bool(0.7) => p,
            _ => *earlier.choose(&mut g.rng).expect("non-empty"),
        };
        let n_lines = g.drafts[source].lines.len();
        let len = g.rng.gen_range(1..=n_lines.min(2));
        let first = g.rng.gen_range(0..=n_lines - len);
        let mut excerpt: Vec<String> = g.drafts[source].lines[first..first + len].to_vec();
        let truncated = g.rng.gen_bool(params.quote_noise);
        if truncated {
            let mut words: Vec<&str> = excerpt[0].split(' ').collect();
            let drop = g.rng.gen_range(1..=2);
            words.truncate(words.len() - drop);
            excerpt[0] = words.join(" ");
        }

        let mut lines = Vec::new();
        if g.rng.gen_bool(params.hint_rate) {
            lines.push(hint_line(g, source));
        }
        lines.extend(excerpt.iter().map(|l| format!("> {l}")));
        let list = list_id(g.drafts[i].list).to_string();
        let message_id = g.drafts[i].message_id.clone();
        quotes.push(GtQuote {
            list_id: list.clone(),
            message_id: message_id.clone(),
            block_index: 0,
            depth: 1,
            source: MessageKey::new(list.clone(), g.drafts[source].message_id.clone()),
            truncated,
        });

        if let Some((inner, inner_lines, inner_truncated)) = g.drafts[source].quoted.clone() {
            if g.rng.gen_bool(params.nested_quote_rate) {
                if g.rng.gen_bool(params.hint_rate) {
                    let name = g.people[g.drafts[inner].sender].name.clone();
                    lines.push(format!("> {name} wrote:"));
                }
                lines.extend(inner_lines.iter().map(|l| format!(">> {l}")));
                quotes.push(GtQuote {
                    list_id: list.clone(),
                    message_id,
                    block_index: 1,
                    depth: 2,
                    source: MessageKey::new(list, g.drafts[inner].message_id.clone()),
                    truncated: inner_truncated,
                });
            }
        }
        g.drafts[i].quote_lines = lines;
        g.drafts[i].quoted = Some((source, excerpt, truncated));
    }
    quotes
}

fn make_revisions(g: &mut Gen, params: &SynthParams, base: Timestamp) -> (Vec<GtRevision>, [String; 2]) {
    let by_role = |g: &Gen, roles: &[Role]| -> Vec<usize> {
        (0..g.people.len())
            .filter(|&i| roles.contains(&g.people[i].role))
            .collect()
    };
    let staff = by_role(g, &[Role::ProjectLeader, Role::Administrator, Role::Developer]);
    let mut editors = by_role(g, &[Role::Administrator, Role::ProjectLeader]);
    if editors.is_empty() {
        editors = staff.clone();
    }
    let mut maintainers = by_role(g, &[Role::Administrator]);
    if maintainers.is_empty() {
        maintainers = staff.clone();
    }
    let mut revisions = Vec::new();
    let mut logs = [String::new(), String::new()];
    let plan = [
        (Space::Documentation, params.doc_revisions, "peps/pep-0327.txt", 0.6),
        (Space::Implementation, params.impl_revisions, "Lib/decimal.py", 0.75),
    ];
    let mut n = 0;
    for (slot, (space, count, path, main_share)) in plan.into_iter().enumerate() {
        if count == 0 {
            continue;
        }
        let main = if slot == 0 {
            *editors.choose(&mut g.rng).expect("validated")
        } else {
            *maintainers.choose(&mut g.rng).expect("validated")
        };
        for k in 0..count {
            n += 1;
            let committer = if g.rng.gen_bool(main_share) {
                main
            } else {
                *staff.choose(&mut g.rng).expect("validated")
            };
            let (w1, w2) = (g.word(), g.word());
            let mut credited = BTreeSet::new();
            let message = if g.rng.gen_bool(params.credit_rate) && g.people.len() > 1 {
                let who = loop {
                    let p = g.rng.gen_range(0..g.people.len());
                    if p != committer {
                        break p;
                    }
                };
                let name = g.people[who].name.clone();
                credited.insert(ParticipantId::new(name.clone()));
                match g.rng.gen_range(0..3) {
                    0 => format!("Apply {name}'s {w1} {w2}"),
                    1 => format!("{w1} {w2} patch by {name}"),
                    _ => format!("{w1} {w2} thanks to {name}"),
                }
            } else {
                format!("{w1} {w2}")
            };
            let date = base + (k as i64) * 2 * SECONDS_PER_DAY + g.rng.gen_range(0..SECONDS_PER_DAY);
            let author = if g.rng.gen_bool(0.5) {
                g.people[committer].handle.clone()
            } else {
                g.people[committer].email.clone()
            };
            let entry = RevisionLogEntry {
                revision: format!("r{n}"),
                space,
                path: path.to_string(),
                author,
                date: DateTime::from_timestamp(date, 0)
                    .expect("in range")
                    .to_rfc3339_opts(SecondsFormat::Secs, true),
                message,
            };
            logs[slot].push_str(&serde_json::to_string(&entry).expect("entry serializes"));
            logs[slot].push('\n');
            revisions.push(GtRevision {
                revision_id: entry.revision,
                space,
                committer: ParticipantId::new(g.people[committer].name.clone()),
                credited,
            });
        }
    }
    (revisions, logs)
}

fn from_header(g: &mut Gen, person: usize) -> String {
    let p = &g.people[person];
    match g.rng.gen_range(0..3) {
        0 => format!("{} <{}>", p.name, p.email),
        1 => format!("{} ({})", p.email, p.name),
        _ => format!("{} ({})", p.email.replace('@', " at "), p.name),
    }
}

fn rfc2822(g: &mut Gen, ts: Timestamp) -> String {
    let offsets = [-8 * 3600, -5 * 3600, 0, 3600, 9 * 3600];
    let off = FixedOffset::east_opt(*offsets.choose(&mut g.rng).expect("non-empty")).expect("valid offset");
    DateTime::from_timestamp(ts, 0)
        .expect("in range")
        .with_timezone(&off)
        .to_rfc2822()
}

fn separator(email: &str, ts: Timestamp) -> String {
    let asctime = DateTime::from_timestamp(ts, 0)
        .expect("in range")
        .format("%a %b %e %H:%M:%S %Y");
    format!("From {email} {asctime}\n")
}

fn render_message(g: &mut Gen, i: usize) -> String {
    let from = from_header(g, g.drafts[i].sender);
    let date = rfc2822(g, g.drafts[i].date);
    let d = &g.drafts[i];
    let mut out = separator(&g.people[d.sender].email, d.date);
    out.push_str(&format!("From: {from}\n"));
    out.push_str(&format!("To: {}@example.org\n", list_id(d.list)));
    out.push_str(&format!("Subject: {}\n", d.subject));
    out.push_str(&format!("Date: {date}\n"));
    out.push_str(&format!("Message-ID: <{}>\n", d.message_id));
    if let (Some(p), false) = (d.parent, d.lose_headers) {
        let mut chain = Vec::new();
        let mut cur = Some(p);
        while let Some(c) = cur {
            chain.push(format!("<{}>", g.drafts[c].message_id));
            cur = g.drafts[c].parent;
        }
        chain.reverse();
        out.push_str(&format!("In-Reply-To: <{}>\n", g.drafts[p].message_id));
        out.push_str(&format!("References: {}\n", chain.join(" ")));
    }
    out.push_str("Content-Type: text/plain; charset=utf-8\n\n");
    if !d.quote_lines.is_empty() {
        for l in &d.quote_lines {
            out.push_str(l);
            out.push('\n');
        }
        out.push('\n');
    }
    for l in &d.lines {
        out.push_str(l);
        out.push('\n');
    }
    out.push('\n');
    out
}

fn malformed_entry(g: &mut Gen, k: usize) -> String {
    let ts = base_time() + g.rng.gen_range(0..100 * SECONDS_PER_DAY);
    let id = format!("malformed.{k}.s{}@synth.invalid", g.seed);
    let date = rfc2822(g, ts);
    let line = g.line();
    let headers = match g.rng.gen_range(0..3) {
        0 => format!("From: Nobody <nobody@example.org>\nSubject: {KEYWORD} broken\nMessage-ID: <{id}>\n"),
        1 => format!(
            "From: Nobody <nobody@example.org>\nSubject: {KEYWORD} broken\nDate: not-a-date\nMessage-ID: <{id}>\n"
        ),
        _ => format!("Subject: {KEYWORD} broken\nDate: {date}\nMessage-ID: <{id}>\n"),
    };
    format!("{}{headers}\n{line}\n\n", separator("nobody@example.org", ts))
}
