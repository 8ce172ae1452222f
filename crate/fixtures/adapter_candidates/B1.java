public class B1 {
    private E1 e;

    public void run() {
        e.foo();
    }
}
