public class E1 {
    public void foo() { }
}
