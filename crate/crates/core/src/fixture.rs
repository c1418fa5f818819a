//! Deterministic synthetic corpus used by the tests, benches and the
//! `fixture` command: a few hand-written projects plus generated projects
//! whose class counts land in the larger size buckets.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureConfig {
    /// Class count of each generated project.
    pub inflate: Vec<usize>,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig { inflate: vec![30, 60, 110] }
    }
}

/// A file that deliberately falls outside the supported subset.
pub const BROKEN_FILE: &str = "shapes/src/shapes/Broken.java";

const DEMO: &[(&str, &str)] = &[
    (
        "demo/src/app/A.java",
        r#"package app;

import lib.C;

public class A {
    private int count;

    public void main(String[] args) {
        helper();
        B.util();
        String s = C.fmt("x");
        String t = String.format("%s", s);
    }

    int helper() {
        return count;
    }
}
"#,
    ),
    (
        "demo/src/app/B.java",
        r#"package app;

class B {
    static int util() {
        return 42;
    }
}
"#,
    ),
    (
        "demo/src/lib/C.java",
        r#"package lib;

public class C {
    public static String fmt(String s) {
        return pad(s, 4);
    }

    static String pad(String s, int width) {
        String out = s;
        while (out.length() < width) {
            out = out + " ";
        }
        return out;
    }
}
"#,
    ),
];

const METRICS: &[(&str, &str)] = &[
    (
        "metrics/src/calc/Flow.java",
        r#"package calc;

public class Flow {
    void empty() {
    }

    int add(int a, int b) {
        int c = a + b;
        return c;
    }

    int abs(int x) {
        if (x < 0) {
            x = -x;
        }
        return x;
    }

    int max(int a, int b) {
        if (a > b) {
            return a;
        } else {
            return b;
        }
    }

    int clamp(int x, int lo, int hi) {
        if (x < lo && lo > 0) return lo;
        if (x > hi) return hi;
        return x;
    }

    int sum(int n) {
        int s = 0;
        int i = 0;
        while (i < n) {
            s += i;
            i++;
        }
        return s;
    }

    int countPositive(int[] xs) {
        int c = 0;
        for (int i = 0; i < xs.length; i++) {
            if (xs[i] > 0) {
                c++;
            }
        }
        return c;
    }

    String sign(int x) {
        if (x > 0) {
            return "pos";
        } else if (x < 0) {
            return "neg";
        } else {
            return "zero";
        }
    }

    int pick(boolean f, int a, int b) {
        return f ? a : b;
    }

    int score(int a, int b) {
        int s = 0;
        if (a > 0) s++;
        if (b > 0) s++;
        if (a > b || b > 10) s += 2;
        return s;
    }

    void drain(int n, boolean stop) {
        while (n > 0 || !stop) {
            n--;
        }
    }

    int pairs(int n) {
        int c = 0;
        for (int i = 0; i < n; i++) {
            for (int j = i + 1; j < n; j++) {
                c += i * j;
            }
        }
        return c;
    }
}
"#,
    ),
    (
        "metrics/src/calc/Dataflow.java",
        r#"package calc;

public class Dataflow {
    private int total;

    int straight() {
        int x = 1;
        int y = x;
        return y;
    }

    void branch(int a, int b, int c) {
        if (a > 0) {
            b = a;
        } else {
            b = 0;
        }
        c = b;
    }

    int loop(int n) {
        int i = 0;
        while (i < n) {
            i = i + 1;
        }
        return i;
    }

    int accumulate(int n) {
        for (int k = 0; k < n; k++) {
            total = total + k;
        }
        return total;
    }

    int early(int x) {
        int y = 0;
        if (x > 10) {
            return y;
        }
        y = x * 2;
        return y;
    }

    boolean guard(int a, int b) {
        boolean ok = a > 0 && b > a;
        int m = ok ? a : b;
        return m > 1;
    }

    int swapIn(int a, int b) {
        int t = a;
        a = b;
        b = t;
        return a - b;
    }
}
"#,
    ),
];

const SHAPES: &[(&str, &str)] = &[
    (
        "shapes/src/shapes/Shape.java",
        r#"package shapes;

public class Shape {
    protected String name;

    public Shape(String name) {
        this.name = name;
    }

    public double area() {
        return 0.0;
    }

    public String describe() {
        return name + " with area " + format(area());
    }

    static String format(double value) {
        return String.valueOf(value);
    }

    static String format(int value) {
        return Integer.toString(value);
    }
}
"#,
    ),
    (
        "shapes/src/shapes/Circle.java",
        r#"package shapes;

public class Circle extends Shape {
    private double radius;

    public Circle(double radius) {
        this.radius = radius;
        name = "circle";
    }

    public double area() {
        return Math.PI * radius * radius;
    }

    public String label() {
        return describe();
    }
}
"#,
    ),
    (
        "shapes/src/shapes/Square.java",
        r#"package shapes;

public class Square extends Shape {
    private int side;

    public Square(int side) {
        this.side = side;
        name = "square";
    }

    public double area() {
        return side * side;
    }

    public String sideText() {
        return format(side);
    }
}
"#,
    ),
    (
        "shapes/src/shapes/Gallery.java",
        r#"package shapes;

import java.util.List;
import java.util.ArrayList;

public class Gallery {
    private List<Shape> items = new ArrayList<Shape>();

    public void add(Shape s) {
        items.add(s);
    }

    public void fill(int n) {
        for (int i = 0; i < n; i++) {
            if (i % 2 == 0) {
                add(new Circle(i));
            } else {
                add(new Square(i));
            }
        }
    }

    public double total() {
        double sum = 0;
        for (int i = 0; i < items.size(); i++) {
            Shape s = items.get(i);
            sum += s.area();
        }
        return sum;
    }

    public String report(Circle c, Square q) {
        String left = c.label();
        String right = q.sideText();
        return left + ", " + right + " " + Shape.format(3);
    }
}
"#,
    ),
    (
        BROKEN_FILE,
        r#"package shapes;

public class Broken {
    Runnable task() {
        return () -> System.out.println("lambdas are outside the subset");
    }
}
"#,
    ),
];

const TEXTUTIL: &[(&str, &str)] = &[
    (
        "textutil/src/text/Words.java",
        r#"package text;

public class Words {
    private String separator;

    public Words(String separator) {
        this.separator = separator;
    }

    public int count(String line) {
        if (line == null || line.isEmpty()) {
            return 0;
        }
        int words = 1;
        for (int i = 0; i < line.length(); i++) {
            if (line.charAt(i) == ' ') {
                words++;
            }
        }
        return words;
    }

    public String join(String[] parts) {
        StringBuilder sb = new StringBuilder();
        for (int i = 0; i < parts.length; i++) {
            if (i > 0) {
                sb.append(separator);
            }
            sb.append(parts[i]);
        }
        return sb.toString();
    }

    public String capitalize(String word) {
        if (word.isEmpty()) {
            return word;
        }
        return word.substring(0, 1).toUpperCase() + word.substring(1);
    }
}
"#,
    ),
    (
        "textutil/src/text/Stats.java",
        r#"package text;

import text.fmt.Format;

public class Stats {
    private int lines;
    private int chars;

    public void add(String line) {
        lines = lines + 1;
        chars += line.length();
    }

    public double average() {
        if (lines == 0) {
            return 0;
        }
        return chars / lines;
    }

    public String summary(Words words, String sample) {
        int n = words.count(sample);
        String head = words.capitalize(sample);
        return Format.pair(head, n) + " avg=" + average();
    }
}
"#,
    ),
    (
        "textutil/src/text/fmt/Format.java",
        r#"package text.fmt;

public class Format {
    public static String pair(String key, int value) {
        return key + "=" + value;
    }

    public static String pair(String key, String value) {
        return key + "=" + value;
    }
}
"#,
    ),
];

/// Hand-written projects as `(path relative to corpus root, source)`.
pub fn handwritten() -> impl Iterator<Item = (&'static str, &'static str)> {
    DEMO.iter().chain(METRICS).chain(SHAPES).chain(TEXTUTIL).copied()
}

pub fn project_names(cfg: &FixtureConfig) -> Vec<String> {
    let mut names: Vec<String> = ["demo", "metrics", "shapes", "textutil"].iter().map(|s| s.to_string()).collect();
    names.extend(cfg.inflate.iter().map(|n| format!("inflate{n}")));
    names
}

/// Sources of a generated project with `classes` classes spread over
/// packages of ten.
pub fn inflated(classes: usize) -> Vec<(String, String)> {
    let project = format!("inflate{classes}");
    let pkg = |i: usize| format!("p{}", i / 10);
    (0..classes)
        .map(|i| {
            let same = if (i + 1) % 10 == 0 || i + 1 == classes { i - i % 10 } else { i + 1 };
            let other = (i + 10) % classes;
            let mut src = String::new();
            let _ = writeln!(src, "package {};\n", pkg(i));
            if pkg(other) != pkg(i) {
                let _ = writeln!(src, "import {}.C{other};\n", pkg(other));
            }
            let _ = writeln!(src, "public class C{i} {{");
            let _ = writeln!(src, "    private int value;\n");
            let _ = writeln!(src, "    public C{i}(int value) {{\n        this.value = value;\n    }}\n");
            let _ = writeln!(src, "    public static int twice(int x) {{\n        return x * {};\n    }}\n", 2 + i % 3);
            let _ = writeln!(src, "    public int step(int x) {{");
            match i % 3 {
                0 => {
                    let _ = writeln!(src, "        if (x > value) {{\n            return x - value;\n        }}");
                }
                1 => {
                    let _ = writeln!(src, "        while (x > value) {{\n            x = x / 2;\n        }}");
                }
                _ => {
                    let _ = writeln!(src, "        int y = x > value ? x : value;\n        x = y + 1;");
                }
            }
            if same == i {
                let _ = writeln!(src, "        return helper(x) + twice(x);\n    }}\n");
            } else {
                let _ = writeln!(src, "        return helper(x) + C{same}.twice(x);\n    }}\n");
            }
            let _ = writeln!(src, "    int helper(int x) {{");
            let _ = writeln!(src, "        int total = 0;");
            let _ = writeln!(src, "        for (int k = 0; k < x; k++) {{");
            let _ = writeln!(src, "            total += C{other}.twice(k);\n        }}");
            let _ = writeln!(src, "        return Math.max(total, value);\n    }}\n}}");
            (format!("{project}/src/{}/C{i}.java", pkg(i)), src)
        })
        .collect()
}

/// Writes the whole corpus below `root`, one directory per project.
pub fn write_fixture(root: &Path, cfg: &FixtureConfig) -> Result<()> {
    let mut files: Vec<(String, String)> = handwritten().map(|(p, s)| (p.to_string(), s.to_string())).collect();
    for &n in &cfg.inflate {
        if n == 0 {
            return Err(Error::InvalidArgument("inflated projects need at least one class".into()));
        }
        files.extend(inflated(n));
    }
    for (rel, src) in files {
        let path = root.join(&rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(&path, src).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexparse::parse;

    #[test]
    fn handwritten_sources_parse_except_the_broken_one() {
        for (path, src) in handwritten() {
            let ok = parse(src).is_ok();
            assert_eq!(ok, path != BROKEN_FILE, "{path}");
        }
    }

    #[test]
    fn inflated_sources_parse() {
        let files = inflated(23);
        assert_eq!(files.len(), 23);
        for (path, src) in &files {
            parse(src).unwrap_or_else(|e| panic!("{path}: {e}\n{src}"));
        }
    }
}
