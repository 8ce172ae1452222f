public class E2 {
    public void bar() { }
}
