#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "crashlens/error.hpp"
#include "crashlens/trace_model.hpp"

using namespace crashlens;

namespace {

const char* kChained =
    "javax.faces.FacesException: #{bean.save}: wrapped\n"
    "\tat com.sun.faces.application.ActionListenerImpl.processAction(ActionListenerImpl.java:110)\n"
    "\tat javax.faces.component.UICommand.broadcast(UICommand.java:387)\n"
    "Caused by: javax.el.ELException: /form.jsp @12\n"
    "\tat org.apache.el.parser.AstValue.invoke(AstValue.java:191)\n"
    "\t... 2 more\n"
    "Caused by: java.lang.NullPointerException\n"
    "\tat s.p.ClassMBean.methodA(ClassMBean.java:280)\n"
    "\tat s.p.ClassMBean$$EnhancerByCGLIB$$1f2e.methodA(<generated>)\n"
    "\t... 4 more\n";

}  // namespace

TEST(ParseStackTrace, SingleFrameFigureStyle) {
  auto t = parse_stack_trace("java.lang.NullPointerException\n at s.p.ClassMBean.methodA(ClassMBean.java:280)");
  ASSERT_EQ(t.frames.size(), 1u);
  EXPECT_EQ(t.exception_type, "java.lang.NullPointerException");
  EXPECT_FALSE(t.message.has_value());
  const auto& top = crash_point(t);
  EXPECT_EQ(top.qualified_method.str(), "s.p.ClassMBean.methodA");
  EXPECT_EQ(top.qualified_method.package, "s.p");
  EXPECT_EQ(top.qualified_method.class_name, "ClassMBean");
  EXPECT_EQ(top.qualified_method.method, "methodA");
  EXPECT_EQ(top.file_name, "ClassMBean.java");
  EXPECT_EQ(top.line, 280u);
  EXPECT_EQ(top.position, 0u);
}

TEST(ParseStackTrace, DuplicateFramesKeepOrder) {
  auto t = parse_stack_trace("X\n at a.B.c(B.java:1)\n at a.B.c(B.java:1)");
  ASSERT_EQ(t.frames.size(), 2u);
  EXPECT_EQ(t.frames[0], (Frame{t.frames[0].qualified_method, "B.java", 1u, 0}));
  EXPECT_EQ(t.frames[1].position, 1u);
  EXPECT_EQ(t.frames[0].str(), t.frames[1].str());
}

TEST(ParseStackTrace, ChainedExceptionPutsDeepestCauseFirst) {
  auto t = parse_stack_trace(kChained);
  // Hand-unrolled: deepest cause segment, then the ELException segment,
  // then the outermost FacesException segment.
  std::vector<std::string> expected = {
      "s.p.ClassMBean.methodA(ClassMBean.java:280)",
      "s.p.ClassMBean$$EnhancerByCGLIB$$1f2e.methodA(<generated>)",
      "org.apache.el.parser.AstValue.invoke(AstValue.java:191)",
      "com.sun.faces.application.ActionListenerImpl.processAction(ActionListenerImpl.java:110)",
      "javax.faces.component.UICommand.broadcast(UICommand.java:387)",
  };
  ASSERT_EQ(t.frames.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(t.frames[i].str(), expected[i]);
    EXPECT_EQ(t.frames[i].position, i);
  }
  EXPECT_EQ(t.exception_type, "java.lang.NullPointerException");
  EXPECT_EQ(crash_point(t).qualified_method.str(), "s.p.ClassMBean.methodA");
  EXPECT_EQ(t.raw_text, kChained);
}

TEST(ParseStackTrace, SuppressedBlocksAreSkipped) {
  auto t = parse_stack_trace(
      "java.io.IOException: close\n"
      "\tat a.b.Main.run(Main.java:10)\n"
      "\tSuppressed: java.lang.IllegalStateException\n"
      "\t\tat a.b.Res.close(Res.java:5)\n"
      "\t\t... 1 more\n"
      "\tat a.b.Main.main(Main.java:3)\n");
  ASSERT_EQ(t.frames.size(), 2u);
  EXPECT_EQ(t.frames[1].qualified_method.str(), "a.b.Main.main");
  EXPECT_EQ(*t.message, "close");
}

TEST(ParseStackTrace, SpecialLocationsAndModulePrefixes) {
  auto t = parse_stack_trace(
      "Exception in thread \"main\" java.lang.RuntimeException: boom\n"
      "\tat java.base/jdk.internal.reflect.NativeMethodAccessorImpl.invoke0(Native Method)\n"
      "\tat sun.reflect.GeneratedMethodAccessor10184.invoke(Unknown Source)\n"
      "\tat app//a.b.C.d(C.java)\n");
  ASSERT_EQ(t.frames.size(), 3u);
  EXPECT_EQ(t.exception_type, "java.lang.RuntimeException");
  EXPECT_EQ(t.frames[0].qualified_method.package, "jdk.internal.reflect");
  EXPECT_EQ(t.frames[0].file_name, "Native Method");
  EXPECT_FALSE(t.frames[0].line.has_value());
  EXPECT_FALSE(t.frames[0].has_source_file());
  EXPECT_EQ(t.frames[1].file_name, "Unknown Source");
  EXPECT_EQ(t.frames[2].qualified_method.str(), "a.b.C.d");
  EXPECT_TRUE(t.frames[2].has_source_file());
  EXPECT_FALSE(t.frames[2].line.has_value());
}

TEST(ParseStackTrace, RejectsTextWithoutFrames) {
  EXPECT_THROW(parse_stack_trace(""), MalformedTrace);
  EXPECT_THROW(parse_stack_trace("java.lang.Error: nothing here\n"), MalformedTrace);
  EXPECT_THROW(parse_stack_trace("X\n at nopackage(Foo.java:1)"), MalformedTrace);
}

TEST(ParseFrameLine, RejectsNearMisses) {
  EXPECT_FALSE(parse_frame_line("at a.B.c B.java:1"));
  EXPECT_FALSE(parse_frame_line("att a.B.c(B.java:1)"));
  EXPECT_FALSE(parse_frame_line("at a.B.c(B.java:1) trailing"));
  EXPECT_TRUE(parse_frame_line("at a.B.c(B.java:1) ~[app.jar:1.0]"));
}

TEST(CrashPoint, SingleFrameTraceIsThatFrame) {
  auto t = parse_stack_trace("E\n\tat x.Y.z(Y.java:9)");
  EXPECT_EQ(&crash_point(t), &t.frames[0]);
}

TEST(QualifiedFileName, PaperAndInnerClass) {
  auto a = parse_frame_line("at s.p.ClassMBean.methodA(ClassMBean.java:280)");
  EXPECT_EQ(qualified_file_name(*a), "s.p.ClassMBean");
  auto b = parse_frame_line("at a.B$1.run(B.java:4)");
  EXPECT_EQ(qualified_file_name(*b), "a.B");
  auto c = parse_frame_line("at com.sun.proxy.$Proxy12.save(Unknown Source)");
  EXPECT_EQ(qualified_file_name(*c), "com.sun.proxy.$Proxy12");
}

TEST(QualifiedFileName, MatchesStringOracleOnTenFrames) {
  // Oracle: text before '(', drop the trailing ".method", then cut the class
  // part at its first '$' past the first character.
  auto oracle = [](const std::string& line) {
    auto head = line.substr(3, line.find('(') - 3);
    head = head.substr(0, head.rfind('.'));
    auto cls_start = head.rfind('.') + 1;
    auto dollar = head.find('$', cls_start + 1);
    return dollar == std::string::npos ? head : head.substr(0, dollar);
  };
  const std::vector<std::string> lines = {
      "at s.p.ClassMBean.methodA(ClassMBean.java:280)",
      "at s.p.ClassMBean.methodB(ClassMBean.java:251)",
      "at a.B$1.run(B.java:4)",
      "at a.B$Inner$2.call(B.java:77)",
      "at org.hibernate.impl.SessionImpl.flush(SessionImpl.java:1206)",
      "at br.ufrn.sigaa.ensino.dao.TurmaDao.findById(TurmaDao.java:42)",
      "at com.sun.proxy.$Proxy77.save(Unknown Source)",
      "at java.lang.Thread.run(Thread.java:748)",
      "at x.y.z.Q$$Lambda$12.apply(Unknown Source)",
      "at javax.faces.webapp.FacesServlet.service(FacesServlet.java:229)",
  };
  for (const auto& line : lines) {
    auto f = parse_frame_line(line);
    ASSERT_TRUE(f) << line;
    EXPECT_EQ(qualified_file_name(*f), oracle(line)) << line;
  }
}

TEST(Normalize, AccessorNumbersCollapse) {
  auto a = parse_stack_trace("E\n at sun.reflect.GeneratedMethodAccessor10184.invoke(Unknown Source)");
  auto n = normalize_trace(a, NormalizationRules::defaults());
  EXPECT_EQ(n.frames[0].qualified_method.str(), "sun.reflect.GeneratedMethodAccessor#.invoke");
  EXPECT_EQ(n.frames[0].file_name, "Unknown Source");
}

TEST(Normalize, ProxyNumbersCollapse) {
  auto a = parse_stack_trace("E\n at com.sun.proxy.$Proxy123.save(Unknown Source)");
  auto b = parse_stack_trace("E\n at com.sun.proxy.$Proxy77.save(Unknown Source)");
  auto rules = NormalizationRules::defaults();
  auto na = normalize_trace(a, rules);
  EXPECT_EQ(na.frames, normalize_trace(b, rules).frames);
  EXPECT_EQ(na.frames[0].qualified_method.class_name, "$Proxy#");
}

TEST(Normalize, LambdaAndCglibCollapse) {
  auto rules = NormalizationRules::defaults();
  auto a = normalize_trace(
      parse_stack_trace("E\n at a.B$$Lambda$14/0x0000000800c0b840.apply(Unknown Source)\n"
                        " at a.C$$EnhancerBySpringCGLIB$$9f1e2.run(<generated>)"),
      rules);
  EXPECT_EQ(a.frames[0].qualified_method.class_name, "B$$Lambda$#");
  EXPECT_EQ(a.frames[1].qualified_method.class_name, "C$$EnhancerBySpringCGLIB$$#");
}

TEST(Normalize, IdentityWithoutGeneratedFramesAndIdempotent) {
  auto rules = NormalizationRules::defaults();
  auto t = parse_stack_trace(kChained);
  auto plain = parse_stack_trace("E: m\n at a.B.c(B.java:1)\n at d.E.f(E.java:2)");
  EXPECT_EQ(normalize_trace(plain, rules), plain);
  auto once = normalize_trace(t, rules);
  EXPECT_EQ(normalize_trace(once, rules), once);
  for (std::size_t i = 0; i < t.frames.size(); ++i) EXPECT_EQ(once.frames[i].line, t.frames[i].line);
}

TEST(Normalize, BadPatternIsConfigError) {
  EXPECT_THROW(NormalizationRule("([", "x"), ConfigError);
}

TEST(MethodSequence, DropsFilesAndLines) {
  auto t = parse_stack_trace("E\n at a.B.c(B.java:1)\n at d.E.f(Unknown Source)");
  EXPECT_EQ(method_sequence(t), (std::vector<std::string>{"a.B.c", "d.E.f"}));
  EXPECT_EQ(frame_section_text(t), "E\na.B.c(B.java:1)\nd.E.f(Unknown Source)\n");
}
