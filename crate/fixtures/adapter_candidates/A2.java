public class A2 implements T1 {
    private E1 e;
    private E2 e2;

    public void op() {
        e.foo();
        e2.bar();
    }
}
