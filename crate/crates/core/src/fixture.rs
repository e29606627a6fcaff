//! Deterministic git repositories for tests, benchmarks and demos.
//!
//! Commits are written straight into the object database with fixed
//! signatures and timestamps, so the same script always yields the same
//! commit hashes.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use git2::{FileMode, Oid, Repository, Signature, Time};

use crate::error::Result;

pub struct FixtureRepo {
    repo: Repository,
    trees: HashMap<Oid, BTreeMap<String, Oid>>,
    head: Option<Oid>,
}

/// A change to one file: new content, or `None` to delete it.
pub type Change<'a> = (&'a str, Option<&'a [u8]>);

impl FixtureRepo {
    pub fn init(path: &Path) -> Result<Self> {
        let repo = Repository::init(path)?;
        Ok(FixtureRepo {
            repo,
            trees: HashMap::new(),
            head: None,
        })
    }

    pub fn head(&self) -> Option<Oid> {
        self.head
    }

    /// Commits on top of the current HEAD.
    pub fn commit(&mut self, author: &str, seconds: i64, changes: &[Change]) -> Result<Oid> {
        let parents: Vec<Oid> = self.head.into_iter().collect();
        self.commit_with_parents(&parents, author, seconds, changes)
    }

    /// Commits with explicit parents; the tree starts from the first parent's
    /// files. HEAD moves to the new commit.
    pub fn commit_with_parents(
        &mut self,
        parents: &[Oid],
        author: &str,
        seconds: i64,
        changes: &[Change],
    ) -> Result<Oid> {
        let mut files = parents
            .first()
            .and_then(|p| self.trees.get(p).cloned())
            .unwrap_or_default();
        for (path, content) in changes {
            match content {
                Some(bytes) => {
                    files.insert((*path).to_string(), self.repo.blob(bytes)?);
                }
                None => {
                    files.remove(*path);
                }
            }
        }
        let tree_id = self.write_tree(&files, "")?;
        let tree = self.repo.find_tree(tree_id)?;
        let sig = Signature::new(author, author, &Time::new(seconds, 0))?;
        let parent_commits = parents
            .iter()
            .map(|p| self.repo.find_commit(*p))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let parent_refs: Vec<_> = parent_commits.iter().collect();
        let oid = self
            .repo
            .commit(None, &sig, &sig, &format!("commit at {seconds}"), &tree, &parent_refs)?;
        self.repo.reference("refs/heads/main", oid, true, "fixture")?;
        self.repo.set_head("refs/heads/main")?;
        self.trees.insert(oid, files);
        self.head = Some(oid);
        Ok(oid)
    }

    fn write_tree(&self, files: &BTreeMap<String, Oid>, prefix: &str) -> Result<Oid> {
        let mut builder = self.repo.treebuilder(None)?;
        let mut subdirs: BTreeMap<&str, ()> = BTreeMap::new();
        for (path, blob) in files.range(prefix.to_string()..) {
            let Some(rest) = path.strip_prefix(prefix) else {
                break;
            };
            match rest.split_once('/') {
                Some((dir, _)) => {
                    subdirs.insert(dir, ());
                }
                None => {
                    builder.insert(rest, *blob, FileMode::Blob.into())?;
                }
            }
        }
        for dir in subdirs.keys() {
            let sub = self.write_tree(files, &format!("{prefix}{dir}/"))?;
            builder.insert(*dir, sub, FileMode::Tree.into())?;
        }
        Ok(builder.write()?)
    }
}

/// Writes the repository used by the CLI determinism checks: three authors
/// over roughly 600 days, including a merge, a binary file and a rename.
pub fn write_demo_repo(path: &Path) -> Result<Oid> {
    const DAY: i64 = 86_400;
    let t0 = 1_388_534_400; // 2014-01-01
    let mut fx = FixtureRepo::init(path)?;
    let authors = ["ada@example.org", "bob@example.org", "cy@example.org", "di@example.org"];
    let mut body = String::new();
    for step in 0..240i64 {
        let day = step * 5 / 2;
        let who = authors[(step as usize * 7 + (step as usize / 13)) % authors.len()];
        body.push_str(&format!("fn f{step}() -> u32 {{ {} }}\n", step * 3));
        let file = format!("src/mod{}.rs", step % 6);
        let content = format!("// module {}\n{body}", step % 6);
        fx.commit(who, t0 + day * DAY + step * 97, &[(&file, Some(content.as_bytes()))])?;
        if step == 40 {
            fx.commit(who, t0 + day * DAY + 3600, &[("assets/logo.png", Some(b"\x89PNG\0\x01\x02"))])?;
        }
        if step == 120 {
            let main = fx.head().unwrap();
            let side = fx.commit("eve@example.org", t0 + day * DAY + 7200, &[("docs/notes.md", Some(b"side branch\n"))])?;
            fx.commit_with_parents(&[main, side], who, t0 + day * DAY + 9000, &[("docs/notes.md", Some(b"side branch\n"))])?;
        }
    }
    let readme = b"demo\n";
    fx.commit("ada@example.org", t0 + 601 * DAY, &[("README", Some(readme))])?;
    let last = fx.commit("bob@example.org", t0 + 602 * DAY, &[("README", None), ("README.md", Some(readme))])?;
    Ok(last)
}
