public class B extends A {
    private E e;
    private F f;

    public void one() {
        e.ping();
        e.pong();
    }

    public void two() {
        f.tick();
        f.tock();
    }
}
