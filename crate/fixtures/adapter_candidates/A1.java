public class A1 implements T1 {
    private E1 e;

    public void op() {
        e.foo();
    }
}
