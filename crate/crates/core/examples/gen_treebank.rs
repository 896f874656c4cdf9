fn main() {
    print!("{}", lcgram::tree::write_trees(&lcgram::treebank::generate()));
}
