//! S-expression reader with source positions.

use super::PddlError;

#[derive(Clone, Debug, PartialEq)]
pub enum Sx {
    Atom { text: String, line: usize, col: usize },
    List { items: Vec<Sx>, line: usize, col: usize },
}

impl Sx {
    pub fn pos(&self) -> (usize, usize) {
        match self {
            Sx::Atom { line, col, .. } | Sx::List { line, col, .. } => (*line, *col),
        }
    }
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sx::Atom { text, .. } => Some(text),
            Sx::List { .. } => None,
        }
    }
    pub fn list(&self) -> Option<&[Sx]> {
        match self {
            Sx::List { items, .. } => Some(items),
            Sx::Atom { .. } => None,
        }
    }
    /// Head keyword of a list, lowercased.
    pub fn head(&self) -> Option<String> {
        self.list()?.first()?.atom().map(str::to_ascii_lowercase)
    }
}

pub fn read(file: &str, src: &str) -> Result<Sx, PddlError> {
    let mut stack: Vec<(Vec<Sx>, usize, usize)> = Vec::new();
    let mut top: Option<Sx> = None;
    let (mut line, mut col) = (1usize, 1usize);
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let err = |l: usize, c: usize, m: &str| PddlError::new(file, l, c, m);
    while i < chars.len() {
        let ch = chars[i];
        match ch {
            ';' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                    col += 1;
                }
                continue;
            }
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => {}
            '(' => {
                if top.is_some() && stack.is_empty() {
                    return Err(err(line, col, "unexpected text after the top-level expression"));
                }
                stack.push((Vec::new(), line, col));
            }
            ')' => {
                let Some((items, l, c)) = stack.pop() else {
                    return Err(err(line, col, "unbalanced ')'"));
                };
                let sx = Sx::List { items, line: l, col: c };
                match stack.last_mut() {
                    Some(parent) => parent.0.push(sx),
                    None => top = Some(sx),
                }
            }
            _ => {
                let (l, c) = (line, col);
                let mut text = String::new();
                while i < chars.len() && !chars[i].is_whitespace() && !matches!(chars[i], '(' | ')' | ';') {
                    text.push(chars[i]);
                    i += 1;
                    col += 1;
                }
                let sx = Sx::Atom { text, line: l, col: c };
                match stack.last_mut() {
                    Some(parent) => parent.0.push(sx),
                    None => return Err(err(l, c, "expected '('")),
                }
                continue;
            }
        }
        i += 1;
        col += 1;
    }
    if let Some((_, l, c)) = stack.last() {
        return Err(err(*l, *c, "unclosed '('"));
    }
    top.ok_or_else(|| err(line, col, "empty input"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_and_comments() {
        let sx = read("f", "; hi\n(a (b c)\n  d)").unwrap();
        assert_eq!(sx.pos(), (2, 1));
        let items = sx.list().unwrap();
        assert_eq!(items[1].pos(), (2, 4));
        assert_eq!(items[2].pos(), (3, 3));
    }

    #[test]
    fn unbalanced_input_is_located() {
        let e = read("dom.pddl", "(a\n (b)").unwrap_err();
        assert_eq!(e.to_string(), "dom.pddl:1:1: unclosed '('");
        let e = read("x", "(a))").unwrap_err();
        assert_eq!((e.line, e.col), (1, 4));
    }
}
